//! Records kept by the service. Everything here is serialized into the event
//! log, so field changes are format changes.

use std::collections::BTreeMap;

use concord_core::analytics::MixtureReport;
use concord_core::combinatorial::{Bundle, ConditionalRanking, CpNet, IssueTally, MultiPollConfig};
use concord_core::matching::{MatchingInstance, MatchingOutcome};
use concord_core::{AltId, Alternative, MovReport, Rule, RuleResult, WeakOrder};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollKind {
    Single,
    MultiIssue,
    Allocation,
    Matching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UiMode {
    OneColumn,
    TwoColumn,
    Sliders,
    Stars,
    YesNo,
}

impl UiMode {
    pub fn applies_to(self, kind: PollKind) -> bool {
        match self {
            UiMode::OneColumn | UiMode::TwoColumn => true,
            UiMode::Sliders | UiMode::Stars | UiMode::YesNo => kind == PollKind::Single,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollStatus {
    Open,
    Closed,
}

/// Item types and items of an allocation poll.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationSpec {
    pub types: Vec<String>,
    pub items: BTreeMap<String, Vec<String>>,
    /// Agent priority order. Voters not listed follow in order of first submission.
    #[serde(default)]
    pub priority: Vec<String>,
}

fn default_mixture_k() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollConfig {
    #[serde(default = "Rule::default_set")]
    pub rules: Vec<Rule>,
    #[serde(default = "default_mixture_k")]
    pub mixture_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipoll: Option<MultiPollConfig>,
    /// Net shown to voters as a starting point; must be legal for the issue order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpnet_template: Option<CpNet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationSpec>,
    /// Matching session this poll fronts (kind `matching`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching_session: Option<String>,
}

impl Default for PollConfig {
    fn default() -> Self {
        PollConfig {
            rules: Rule::default_set(),
            mixture_k: default_mixture_k(),
            multipoll: None,
            cpnet_template: None,
            allocation: None,
            matching_session: None,
        }
    }
}

/// Alternatives may be given as bare ids or as `{id, label}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlternativeInput {
    Id(AltId),
    Full { id: AltId, label: Option<String> },
}

impl From<AlternativeInput> for Alternative {
    fn from(input: AlternativeInput) -> Self {
        match input {
            AlternativeInput::Id(id) => Alternative::new(id),
            AlternativeInput::Full { id, label } => {
                let label = label.unwrap_or_else(|| id.as_str().to_string());
                Alternative { id, label }
            }
        }
    }
}

/// Body of `POST /polls`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollDefinition {
    pub title: String,
    pub kind: PollKind,
    #[serde(default = "default_ui_mode")]
    pub ui_mode: UiMode,
    #[serde(default)]
    pub created_by: String,
    #[serde(default)]
    pub alternatives: Vec<AlternativeInput>,
    #[serde(default)]
    pub config: PollConfig,
}

fn default_ui_mode() -> UiMode {
    UiMode::OneColumn
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poll {
    pub id: String,
    pub title: String,
    pub kind: PollKind,
    pub ui_mode: UiMode,
    pub status: PollStatus,
    pub created_by: String,
    pub created_at: u64,
    #[serde(default)]
    pub alternatives: Vec<Alternative>,
    pub config: PollConfig,
}

/// What a voter submits. The variant must fit the poll's kind and ui mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// One- or two-column ranking; two-column may leave alternatives out.
    Ranking { order: WeakOrder },
    /// 0..=100 per alternative.
    Sliders { values: BTreeMap<AltId, u32> },
    /// 0..=10 per alternative.
    Stars { values: BTreeMap<AltId, u32> },
    Approval { approved: Vec<AltId> },
    CpNet { net: CpNet },
    /// A live vote on the currently open issue.
    IssueVote { issue: String, value: String },
    Allocation { rankings: BTreeMap<String, Vec<ConditionalRanking>> },
}

impl Payload {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Payload::Ranking { .. } => "ranking",
            Payload::Sliders { .. } => "sliders",
            Payload::Stars { .. } => "stars",
            Payload::Approval { .. } => "approval",
            Payload::CpNet { .. } => "cp_net",
            Payload::IssueVote { .. } => "issue_vote",
            Payload::Allocation { .. } => "allocation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallotRecord {
    pub poll: String,
    pub voter: String,
    pub payload: Payload,
    /// Order used for aggregation, for ordinal payloads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<WeakOrder>,
    /// 1 for the first submission of this voter to this poll.
    pub revision: u64,
    pub submitted_at: u64,
}

/// One rule's margin of victory, or why it could not be computed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MovEntry {
    Report(MovReport),
    Failed { rule: Rule, error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotBody {
    Ranked {
        results: Vec<RuleResult>,
        mov: Vec<MovEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mixture: Option<MixtureReport>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mixture_error: Option<String>,
    },
    Allocation {
        bundles: Vec<Bundle>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsSnapshot {
    pub id: String,
    pub poll: String,
    /// SHA-256 of the frozen profile text.
    pub profile_digest: String,
    pub voters: u64,
    pub seed: u64,
    pub rules: Vec<Rule>,
    pub mixture_k: usize,
    pub body: SnapshotBody,
    pub computed_at: u64,
}

impl ResultsSnapshot {
    /// Same frozen input and settings.
    pub fn matches(&self, digest: &str, seed: u64, rules: &[Rule], k: usize) -> bool {
        self.profile_digest == digest && self.seed == seed && self.rules == rules && self.mixture_k == k
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueDecision {
    pub poll: String,
    pub tally: IssueTally,
    /// Closed by the force flag while live votes were missing.
    pub forced: bool,
    pub decided_at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingRun {
    pub run: u64,
    pub outcome: MatchingOutcome,
    pub ran_at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingSession {
    pub id: String,
    pub title: String,
    pub created_by: String,
    pub created_at: u64,
    #[serde(default)]
    pub instance: Option<MatchingInstance>,
    #[serde(default)]
    pub runs: Vec<MatchingRun>,
}

/// Body of `POST /matchings`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingDefinition {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub created_by: String,
    #[serde(default)]
    pub instance: Option<MatchingInstance>,
}
