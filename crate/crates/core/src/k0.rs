//! The scaled ordered group `(ℚ ⊕ ℚ, {0} ∪ {x > λ|y|}, unit)` and the
//! γ maps from the AF skeleton.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::invariants::TwoSeed;
use crate::numerics::{
    divides, format_rational, int, parse_rational, rational_str, Enclosure, Rational,
};

/// A class `(x, y)` in `ℚ ⊕ ℚ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct K0Element {
    #[serde(with = "rational_str")]
    pub x: Rational,
    #[serde(with = "rational_str")]
    pub y: Rational,
}

impl K0Element {
    pub fn new(x: Rational, y: Rational) -> Self {
        K0Element { x, y }
    }

    pub fn zero() -> Self {
        K0Element::new(Rational::zero(), Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, q: &Rational) -> Self {
        K0Element::new(&self.x * q, &self.y * q)
    }

    /// `σ(x, y) = (x, −y)`.
    pub fn sigma(&self) -> Self {
        K0Element::new(self.x.clone(), -self.y.clone())
    }
}

impl fmt::Display for K0Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rational(&self.x), format_rational(&self.y))
    }
}

/// Cone parameter enclosure and order unit `(N, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedGroupModel {
    pub lambda: Enclosure,
    pub unit: K0Element,
}

impl OrderedGroupModel {
    pub fn new(lambda: Enclosure, unit: K0Element) -> Result<Self> {
        let unit_interval = Enclosure::certified(int(0), int(1))?;
        if !lambda.is_subset_of(&unit_interval) {
            return Err(Error::domain(format!("λ enclosure {lambda} is not inside [0, 1]")));
        }
        if !unit.y.is_zero() || !unit.x.is_integer() || unit.x < int(1) {
            return Err(Error::domain(format!("order unit must be (N, 0) with N ≥ 1, got {unit}")));
        }
        Ok(OrderedGroupModel { lambda, unit })
    }

    /// `λ` as usable for decisions: uncertified data only tells us
    /// `λ ∈ [0, 1]`.
    fn effective_lambda(&self) -> Enclosure {
        effective(&self.lambda)
    }
}

fn effective(lambda: &Enclosure) -> Enclosure {
    if lambda.is_certified() {
        lambda.clone()
    } else {
        Enclosure::certified(int(0), int(1)).expect("ordered endpoints")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeVerdict {
    Positive,
    NotPositive,
    Unknown,
}

/// A cone decision with the enclosure of `x − λ|y|` it was based on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeDecision {
    pub decision: ConeVerdict,
    pub margin: Enclosure,
}

fn margin(lambda: &Enclosure, g: &K0Element) -> Enclosure {
    lambda.scale(&-g.y.abs()).add_scalar(&g.x)
}

fn decide(lambda: &Enclosure, g: &K0Element) -> ConeDecision {
    let margin = margin(lambda, g);
    let decision = if g.is_zero() || margin.lo().is_positive() {
        ConeVerdict::Positive
    } else if !g.x.is_positive() || !margin.hi().is_positive() {
        ConeVerdict::NotPositive
    } else {
        ConeVerdict::Unknown
    };
    ConeDecision { decision, margin }
}

/// Decides `g ∈ {0} ∪ {x > λ|y|}`. When undecided, `refine(k)` is asked for
/// a tighter `λ` enclosure for rounds `k = 1..=max_refine`.
pub fn cone_contains(
    model: &OrderedGroupModel,
    g: &K0Element,
    refine: Option<&dyn Fn(usize) -> Option<Enclosure>>,
    max_refine: usize,
) -> ConeDecision {
    let mut lambda = model.effective_lambda();
    let mut out = decide(&lambda, g);
    if let Some(refine) = refine {
        for k in 1..=max_refine {
            if out.decision != ConeVerdict::Unknown {
                break;
            }
            let Some(next) = refine(k) else { break };
            if next.is_certified() {
                let lo = lambda.lo().max(next.lo()).clone();
                let hi = lambda.hi().min(next.hi()).clone();
                if let Ok(tighter) = Enclosure::certified(lo, hi) {
                    lambda = tighter;
                }
            }
            out = decide(&lambda, g);
        }
    }
    out
}

/// `x + t·λ·y` for a state parameter `t ∈ [−1, 1]`.
pub fn state_eval(model: &OrderedGroupModel, t: &Rational, g: &K0Element) -> Result<Enclosure> {
    if t.abs() > int(1) {
        return Err(Error::domain(format!("state parameter t = {} outside [−1, 1]", format_rational(t))));
    }
    Ok(model.effective_lambda().scale(&(t * &g.y)).add_scalar(&g.x))
}

/// A group automorphism of `ℚ ⊕ ℚ` acting on column vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupAutomorphism {
    m: [[Rational; 2]; 2],
}

impl GroupAutomorphism {
    pub fn new(m: [[Rational; 2]; 2]) -> Result<Self> {
        let q = GroupAutomorphism { m };
        if q.det().is_zero() {
            return Err(Error::domain("matrix is not invertible"));
        }
        Ok(q)
    }

    pub fn identity() -> Self {
        GroupAutomorphism {
            m: [[int(1), int(0)], [int(0), int(1)]],
        }
    }

    /// `σ(x, y) = (x, −y)`.
    pub fn sigma() -> Self {
        GroupAutomorphism {
            m: [[int(1), int(0)], [int(0), int(-1)]],
        }
    }

    pub fn matrix(&self) -> &[[Rational; 2]; 2] {
        &self.m
    }

    pub fn det(&self) -> Rational {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn apply(&self, g: &K0Element) -> K0Element {
        K0Element::new(
            &self.m[0][0] * &g.x + &self.m[0][1] * &g.y,
            &self.m[1][0] * &g.x + &self.m[1][1] * &g.y,
        )
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &GroupAutomorphism) -> GroupAutomorphism {
        let a = &self.m;
        let b = &other.m;
        let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
        GroupAutomorphism {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn inverse(&self) -> GroupAutomorphism {
        let d = self.det();
        let m = &self.m;
        GroupAutomorphism {
            m: [
                [&m[1][1] / &d, -(&m[0][1] / &d)],
                [-(&m[1][0] / &d), &m[0][0] / &d],
            ],
        }
    }

    /// `Qⁿ` for any integer `n`.
    pub fn pow(&self, n: i64) -> GroupAutomorphism {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = GroupAutomorphism::identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&sq);
            }
            sq = sq.compose(&sq);
            e >>= 1;
        }
        acc
    }

    /// `Q(1, 0) = (1, 0)`.
    pub fn fixes_unit(&self) -> bool {
        self.m[0][0] == int(1) && self.m[1][0].is_zero()
    }

    pub fn is_identity(&self) -> bool {
        *self == GroupAutomorphism::identity()
    }

    pub fn is_sigma(&self) -> bool {
        *self == GroupAutomorphism::sigma()
    }
}

impl Serialize for GroupAutomorphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = self
            .m
            .iter()
            .map(|row| row.iter().map(format_rational).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupAutomorphism {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(D::Error::custom("automorphism must be a 2×2 matrix"));
        }
        let p = |s: &str| parse_rational(s).map_err(D::Error::custom);
        GroupAutomorphism::new([
            [p(&rows[0][0])?, p(&rows[0][1])?],
            [p(&rows[1][0])?, p(&rows[1][1])?],
        ])
        .map_err(D::Error::custom)
    }
}

/// The order-unit-preserving automorphisms: identity and `σ`.
pub fn canonical_automorphisms(model: &OrderedGroupModel) -> Result<Vec<GroupAutomorphism>> {
    if !model.lambda.is_certified() || !model.lambda.lo().is_positive() {
        return Err(Error::precondition(format!(
            "λ > 0 is not certified: λ ∈ {}",
            model.lambda
        )));
    }
    Ok(vec![GroupAutomorphism::identity(), GroupAutomorphism::sigma()])
}

/// A positive class mapped outside the cone by `Q^(±n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub class: K0Element,
    pub image: K0Element,
    pub n: u32,
    /// True when the witness uses `Q^(−n)`.
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WitnessSearch {
    Found(ConeWitness),
    /// `Q` is the identity or `σ`, both of which preserve the cone.
    NotApplicable,
    /// No witness within the grid and power budget.
    Exhausted,
}

/// Searches for a class `(1, ±y)`, `y` in the grid and `0 < y < 1/λ_hi`,
/// certified positive and mapped by `Q^(±n)`, `n ≤ n_max`, to a class
/// certified not positive.
pub fn cone_preservation_witness(
    model: &OrderedGroupModel,
    q: &GroupAutomorphism,
    y_grid: &[Rational],
    n_max: u32,
) -> Result<WitnessSearch> {
    if !q.fixes_unit() {
        return Err(Error::Contract("Q must fix (1, 0)".into()));
    }
    if q.is_identity() || q.is_sigma() {
        return Ok(WitnessSearch::NotApplicable);
    }
    let lambda = model.effective_lambda();
    let classes: Vec<K0Element> = y_grid
        .iter()
        .filter(|y| y.is_positive() && (lambda.hi().is_zero() || *y * lambda.hi() < int(1)))
        .flat_map(|y| [K0Element::new(int(1), y.clone()), K0Element::new(int(1), -y.clone())])
        .filter(|g| decide(&lambda, g).decision == ConeVerdict::Positive)
        .collect();
    let (fwd, bwd) = (q.clone(), q.inverse());
    let (mut pf, mut pb) = (GroupAutomorphism::identity(), GroupAutomorphism::identity());
    for n in 1..=n_max {
        pf = pf.compose(&fwd);
        pb = pb.compose(&bwd);
        for (power, inverse) in [(&pf, false), (&pb, true)] {
            for g in &classes {
                let image = power.apply(g);
                if decide(&lambda, &image).decision == ConeVerdict::NotPositive {
                    return Ok(WitnessSearch::Found(ConeWitness {
                        class: g.clone(),
                        image,
                        n,
                        inverse,
                    }));
                }
            }
        }
    }
    Ok(WitnessSearch::Exhausted)
}

/// Default `y` values for [`cone_preservation_witness`]: `j/16` for
/// `j ≤ 32` and points `(1 − 2^−k)/λ_hi` approaching the cone boundary.
pub fn default_y_grid(lambda_hi: &Rational) -> Vec<Rational> {
    let mut grid: Vec<Rational> = (1..=32).map(|j| Rational::new(j.into(), 16.into())).collect();
    if lambda_hi.is_positive() {
        let mut step = Rational::one();
        for _ in 1..=40 {
            step /= int(2);
            grid.push((Rational::one() - &step) / lambda_hi);
        }
    }
    grid
}

/// `γ_n(m₁, m₂) = ((m₁ + m₂)/(2r(n)), (m₁ − m₂)/(2r′(n)))`.
pub fn gamma_image(two_seed: &TwoSeed, n: usize, m1: &BigInt, m2: &BigInt) -> Result<K0Element> {
    let r = BigInt::from(two_seed.r(n)?);
    let rp = two_seed
        .r_prime(n)?
        .ok_or_else(|| Error::domain(format!("r′({n}) is not positive")))?;
    let two = BigInt::from(2);
    Ok(K0Element::new(
        Rational::new(m1 + m2, &two * r),
        Rational::new(m1 - m2, &two * BigInt::from(rp)),
    ))
}

/// The AF skeleton map from level `n` to level `n + 1`:
/// `[[l − c, c], [c, l − c]]` at `n + 1`.
pub fn af_transition(two_seed: &TwoSeed, n: usize) -> Result<[[BigUint; 2]; 2]> {
    let mu = two_seed.system().mu(n + 1)?;
    Ok([
        [mu[0][0].clone(), mu[0][1].clone()],
        [mu[1][0].clone(), mu[1][1].clone()],
    ])
}

/// Applies an AF transition matrix to `(m₁, m₂)`.
pub fn apply_transition(t: &[[BigUint; 2]; 2], m1: &BigInt, m2: &BigInt) -> (BigInt, BigInt) {
    let e = |i: usize, j: usize| BigInt::from(t[i][j].clone());
    (e(0, 0) * m1 + e(0, 1) * m2, e(1, 0) * m1 + e(1, 1) * m2)
}

/// Levels `n`, `n′` with `k | r(n)` and `k | r′(n′)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisibilityRow {
    pub k: u64,
    pub n: Option<usize>,
    pub n_prime: Option<usize>,
}

impl DivisibilityRow {
    pub fn found(&self) -> bool {
        self.n.is_some() && self.n_prime.is_some()
    }
}

/// For each `k ≤ max_k`, the least `n, n′ ≤ depth` with `k | r(n)` and
/// `k | r′(n′)`.
pub fn verify_divisibility(two_seed: &TwoSeed, max_k: u64, depth: usize) -> Result<Vec<DivisibilityRow>> {
    let depth = two_seed.system().usable_depth(depth);
    let levels = two_seed.system().levels(depth)?;
    Ok((1..=max_k)
        .map(|k| {
            let kb = BigUint::from(k);
            let n = levels.iter().position(|lv| divides(&kb, &lv.r[0]));
            let n_prime = levels
                .iter()
                .position(|lv| lv.r_prime.as_ref().is_some_and(|rp| divides(&kb, rp)));
            DivisibilityRow { k, n, n_prime }
        })
        .collect())
}

/// The canonical classes `[1] = (1, 0)`, `[p₁] = (½, ½)`, `[p₂] = (½, −½)`.
pub fn unit_class() -> K0Element {
    K0Element::new(int(1), int(0))
}

pub fn p1_class() -> K0Element {
    let h = Rational::new(BigInt::one(), BigInt::from(2));
    K0Element::new(h.clone(), h)
}

pub fn p2_class() -> K0Element {
    p1_class().sigma()
}
