#![allow(dead_code)]

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;
use villadsen_core::fingerprint::{fingerprint, Fingerprint};
use villadsen_core::invariants::{Precision, TwoSeedParams};
use villadsen_core::numerics::{int, ratio};
use villadsen_core::synth::{synthesize_family, BetaSelection, FamilyMember, FamilyRequest, GrowthPolicy};
use villadsen_core::system::{SequenceSpec, SystemDescriptor};
use villadsen_core::Rational;

pub fn precision() -> Precision {
    Precision::new(ratio(1, 1_000_000_000), 120).unwrap()
}

pub fn family(omega: Rational, count: usize) -> Vec<FamilyMember> {
    synthesize_family(&FamilyRequest {
        omega,
        betas: BetaSelection::Count(count),
        precision: precision(),
        policy: GrowthPolicy::Halving,
    })
    .unwrap()
}

/// The five-member family for `ω = 1`, built once per test binary.
pub fn omega_one() -> &'static [FamilyMember] {
    static CELL: OnceLock<Vec<FamilyMember>> = OnceLock::new();
    CELL.get_or_init(|| family(int(1), 5))
}

pub fn omega_one_fingerprints() -> &'static [Fingerprint] {
    static CELL: OnceLock<Vec<Fingerprint>> = OnceLock::new();
    CELL.get_or_init(|| {
        omega_one()
            .iter()
            .map(|m| fingerprint(m, &precision()).unwrap())
            .collect()
    })
}

/// A symmetric two-seed descriptor given by finite tables of length `len`
/// with `c ≥ 1`, `l ≥ 2c + 1`, `d₁ = l − c`, `1 ≤ d₂ ≤ l − c` and
/// `d₁(1) = d₂(1) ≥ 2`.
pub fn random_two_seed(rng: &mut impl Rng, len: usize) -> SystemDescriptor {
    let mut l = Vec::with_capacity(len);
    let mut c = Vec::with_capacity(len);
    let mut d1 = Vec::with_capacity(len);
    let mut d2 = Vec::with_capacity(len);
    for n in 0..len {
        let cn: u64 = rng.gen_range(1..=3);
        let ln = 2 * cn + rng.gen_range(1..=6);
        l.push(ln);
        c.push(cn);
        d1.push(ln - cn);
        d2.push(if n == 0 { ln - cn } else { rng.gen_range(1..=ln - cn) });
    }
    TwoSeedParams {
        l: SequenceSpec::table(l),
        c: SequenceSpec::table(c),
        d1: SequenceSpec::table(d1),
        d2: SequenceSpec::table(d2),
        h: rng.gen_range(1..=4),
        beta: None,
    }
    .to_descriptor()
}

/// Same as [`random_two_seed`], but with the tables given by proptest.
pub fn two_seed_from_tables(rows: &[(u64, u64, u64)], h: u32) -> SystemDescriptor {
    // Each row is (c, l − 2c − 1, d₂ selector).
    let mut l = Vec::new();
    let mut c = Vec::new();
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for (n, &(cn, extra, sel)) in rows.iter().enumerate() {
        let ln = 2 * cn + 1 + extra;
        let diag = ln - cn;
        l.push(ln);
        c.push(cn);
        d1.push(diag);
        d2.push(if n == 0 { diag } else { 1 + sel % diag });
    }
    TwoSeedParams {
        l: SequenceSpec::table(l),
        c: SequenceSpec::table(c),
        d1: SequenceSpec::table(d1),
        d2: SequenceSpec::table(d2),
        h,
        beta: None,
    }
    .to_descriptor()
}

/// Rank of the `l × l` matrix obtained by placing `ρ_j` copies of a rank
/// `rank_j` diagonal projection of size `k_j` along the diagonal and
/// conjugating by a permutation.
pub fn expanded_rank(mult: &[u64], sizes: &[u64], ranks: &[u64], seed: u64) -> u64 {
    let mut diag = Vec::new();
    for j in 0..sizes.len() {
        for _ in 0..mult[j] {
            for i in 0..sizes[j] {
                diag.push(i64::from(i < ranks[j]));
            }
        }
    }
    let l = diag.len();
    let mut perm: Vec<usize> = (0..l).collect();
    let mut state = seed | 1;
    for i in (1..l).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        perm.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let mut m = vec![vec![BigInt::zero(); l]; l];
    for i in 0..l {
        m[perm[i]][perm[i]] = BigInt::from(diag[i]);
    }
    // Mix rows so the matrix is not visibly diagonal: row i += row i+1.
    for i in 0..l.saturating_sub(1) {
        let next = m[i + 1].clone();
        for (a, b) in m[i].iter_mut().zip(next) {
            *a += b;
        }
    }
    integer_rank(m)
}

/// Fraction-free Gaussian elimination.
fn integer_rank(mut m: Vec<Vec<BigInt>>) -> u64 {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, pivot);
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let (a, b) = (m[rank][col].clone(), m[r][col].clone());
                for c in 0..cols {
                    let v = &a * &m[r][c] - &b * &m[rank][c];
                    m[r][c] = v;
                }
            }
        }
        rank += 1;
    }
    rank as u64
}
