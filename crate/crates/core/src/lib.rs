//! Preference aggregation and group decision algorithms.
//!
//! - [`preference`]: alternatives, weak orders, profiles and the profile text format.
//! - [`rules`]: positional scoring rules and all-winners STV / ranked pairs.
//! - [`analytics`]: margin of victory and Plackett-Luce mixtures.
//! - [`combinatorial`]: CP-nets, sequential voting, serial dictatorship.
//! - [`matching`]: score-based course-proposing stable matching with explanations.

pub mod analytics;
pub mod combinatorial;
pub mod matching;
pub mod preference;
pub mod rules;

pub use analytics::{
    margin_of_victory, mixture_report, MixtureReport, MovError, MovMethod, MovReport, PlError,
};
pub use combinatorial::{
    parse_cpnet, sequential_vote, serial_dictatorship, AllocationInstance, CpNet, Issue,
    MultiPollConfig, SequentialOutcome, Voter,
};
pub use matching::{
    explain, rematch, stable_match, InstanceEdit, MatchingError, MatchingInstance,
    MatchingOutcome,
};
pub use preference::{
    complete_with_unranked, pairwise_margins, parse_profile, serialize_profile, AltId,
    Alternative, Ballot, NormalizedProfile, OrderError, PairwiseMatrix, PreferenceProfile,
    ProfileError, WeakOrder,
};
pub use rules::{
    ranked_pairs_put_winners, results_table, rule_winners, stv_put_winners, Rule, RuleError,
    RuleResult, Score, ScoreVector,
};
