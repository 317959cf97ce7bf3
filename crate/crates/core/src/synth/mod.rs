//! Greedy sequence synthesis and the family generator.

mod family;
pub mod greedy;

pub use family::{
    beta_interval, default_betas, synthesize_family, BetaInterval, BetaSelection, FamilyBase,
    FamilyMember, FamilyRequest, Provenance,
};
pub use greedy::{
    choose_d, choose_l, divisibility_schedule, ChooseD, ChooseDParams, ChooseL, ChooseLParams, GrowthPolicy,
};
