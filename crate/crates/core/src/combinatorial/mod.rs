//! Combinatorial domains: CP-nets, sequential issue-by-issue voting and
//! serial dictatorship for multi-type allocation.

pub mod allocation;
pub mod cpnet;
pub mod sequential;

pub use allocation::{
    serial_dictatorship, AgentPreferences, AllocationError, AllocationInstance, Bundle,
    ConditionalRanking,
};
pub use cpnet::{
    parse_cpnet, serialize_cpnet, Assignment, CpNet, CpNetError, CptRow, Issue, ValidationReport,
    Violation,
};
pub use sequential::{
    decide_issue, sequential_vote, IssueTally, MultiPollConfig, SequentialError,
    SequentialOutcome, Voter,
};
