//! Poll, ballot, results and matching-session operations over the event log.
//!
//! Writers hold the log mutex and then the state write lock, so all writes are
//! serialized and every committed event is on disk before it is visible.
//! Results are computed outside both locks from a frozen copy of the ballots.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use concord_core::analytics::margin_of_victory;
use concord_core::combinatorial::{
    decide_issue, serial_dictatorship, AgentPreferences, AllocationInstance, Assignment, Voter,
};
use concord_core::matching::{apply_edits, explain_course, stable_match, Explanation, InstanceEdit};
use concord_core::matching::{MatchingInstance, MatchingOutcome};
use concord_core::{
    complete_with_unranked, mixture_report, results_table, serialize_profile, AltId, Alternative,
    Ballot, PreferenceProfile, Rule, WeakOrder,
};
use parking_lot::{Mutex, RwLock};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ServiceError;
use crate::model::*;
use crate::state::{PollState, State};
use crate::store::{Event, EventLog};

#[derive(Clone, Debug)]
pub struct ServiceOptions {
    /// Events between checkpoints.
    pub checkpoint_every: u64,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions { checkpoint_every: 500 }
    }
}

pub struct Service {
    log: Mutex<EventLog>,
    state: RwLock<State>,
}

/// `GET /polls/{id}` body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollView {
    pub poll: Poll,
    pub voters: usize,
    pub revisions: usize,
    pub snapshots: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_issue: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub decided: Assignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueStatus {
    Decided,
    Open,
    Pending,
}

/// `GET /polls/{id}/issues/{iid}` body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IssueView {
    pub issue: String,
    pub status: IssueStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<IssueDecision>,
    /// Live voters that have voted on this issue.
    pub live_votes: usize,
    /// Live voters still missing a vote on this issue.
    pub awaiting: Vec<String>,
    pub cpnet_voters: usize,
}

/// `GET /matchings/{id}` body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingView {
    pub id: String,
    pub title: String,
    pub created_by: String,
    pub instance: Option<MatchingInstance>,
    pub runs: u64,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Input of one results computation, copied out of the state.
enum Frozen {
    Ranked { profile: PreferenceProfile, voters: u64 },
    Allocation { instance: AllocationInstance },
}

impl Frozen {
    fn digest(&self) -> String {
        match self {
            Frozen::Ranked { profile, .. } => sha256_hex(serialize_profile(profile).as_bytes()),
            Frozen::Allocation { instance } => {
                sha256_hex(&serde_json::to_vec(instance).expect("instance serializes"))
            }
        }
    }

    fn voters(&self) -> u64 {
        match self {
            Frozen::Ranked { voters, .. } => *voters,
            Frozen::Allocation { instance } => instance.agents.len() as u64,
        }
    }
}

impl Service {
    pub fn open(dir: &Path, options: ServiceOptions) -> Result<Self, ServiceError> {
        let (log, state) = EventLog::open(dir, options.checkpoint_every)?;
        tracing::info!(dir = %dir.display(), events = log.last_seq(), polls = state.polls.len(), "opened store");
        Ok(Service { log: Mutex::new(log), state: RwLock::new(state) })
    }

    /// Validates against the current state, then logs and applies the events it returns.
    fn commit<T>(
        &self,
        f: impl FnOnce(&State) -> Result<(Vec<Event>, T), ServiceError>,
    ) -> Result<T, ServiceError> {
        let mut log = self.log.lock();
        let mut state = self.state.write();
        let (events, out) = f(&state)?;
        for event in &events {
            log.append(event)?;
            state.apply(event);
        }
        if log.wants_checkpoint() {
            if let Err(e) = log.checkpoint(&state) {
                tracing::warn!("checkpoint failed: {e}");
            }
        }
        Ok(out)
    }

    fn read<T>(&self, f: impl FnOnce(&State) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        f(&self.state.read())
    }

    /// SHA-256 over the polls, effective ballots, snapshots, decisions and
    /// matching sessions; equal digests mean equal observable state.
    pub fn state_digest(&self) -> String {
        let state = self.state.read();
        let mut h = Sha256::new();
        for (id, p) in &state.polls {
            h.update(id.as_bytes());
            h.update(serde_json::to_vec(&p.poll).expect("serializes"));
            for (voter, b) in p.effective() {
                h.update(voter.as_bytes());
                h.update(serde_json::to_vec(b).expect("serializes"));
            }
            h.update(serde_json::to_vec(&p.snapshots).expect("serializes"));
            h.update(serde_json::to_vec(&p.decisions).expect("serializes"));
        }
        h.update(serde_json::to_vec(&state.matchings).expect("serializes"));
        hex::encode(h.finalize())
    }

    // ---- polls -------------------------------------------------------------

    pub fn create_poll(&self, def: PollDefinition) -> Result<Poll, ServiceError> {
        self.commit(|state| {
            let poll = validate_definition(def, state)?;
            let poll = Poll { id: state.next_poll_id(), created_at: now_ms(), ..poll };
            Ok((vec![Event::PollCreated { poll: poll.clone() }], poll))
        })
    }

    pub fn poll(&self, id: &str) -> Result<PollView, ServiceError> {
        self.read(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            Ok(PollView {
                poll: p.poll.clone(),
                voters: p.effective().len(),
                revisions: p.ballots.len(),
                snapshots: p.snapshots.iter().map(|s| s.id.clone()).collect(),
                current_issue: p.current_issue().map(str::to_string),
                decided: p.decided(),
            })
        })
    }

    pub fn list_polls(&self) -> Vec<Poll> {
        self.state.read().polls.values().map(|p| p.poll.clone()).collect()
    }

    /// A fresh opaque voter token. Tokens are not stored; any token a client
    /// presents identifies one voter.
    pub fn join(&self, id: &str) -> Result<String, ServiceError> {
        self.read(|state| {
            state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            Ok(())
        })?;
        let bytes: [u8; 16] = rand::rng().random();
        Ok(hex::encode(bytes))
    }

    pub fn submit_ballot(
        &self,
        id: &str,
        voter: &str,
        payload: Payload,
    ) -> Result<BallotRecord, ServiceError> {
        let voter = voter.trim();
        if voter.is_empty() {
            return Err(ServiceError::InvalidPayload("voter token is empty".into()));
        }
        self.commit(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            if p.poll.status == PollStatus::Closed {
                return Err(ServiceError::PollClosed(id.to_string()));
            }
            let derived = validate_payload(p, &payload)?;
            let ballot = BallotRecord {
                poll: id.to_string(),
                voter: voter.to_string(),
                payload,
                derived,
                revision: p.revision_of(voter) + 1,
                submitted_at: now_ms(),
            };
            Ok((vec![Event::BallotSubmitted { ballot: ballot.clone() }], ballot))
        })
    }

    pub fn effective_ballots(&self, id: &str) -> Result<Vec<BallotRecord>, ServiceError> {
        self.read(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            Ok(p.effective().into_values().cloned().collect())
        })
    }

    pub fn close_poll(&self, id: &str) -> Result<Poll, ServiceError> {
        self.commit(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            let mut poll = p.poll.clone();
            if poll.status == PollStatus::Closed {
                return Ok((vec![], poll));
            }
            poll.status = PollStatus::Closed;
            Ok((vec![Event::PollClosed { poll: id.to_string(), at: now_ms() }], poll))
        })
    }

    /// Freezes the effective ballots and computes (or reuses) a snapshot.
    pub fn compute_results(&self, id: &str, seed: u64) -> Result<ResultsSnapshot, ServiceError> {
        let (poll, frozen) = self.read(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            Ok((p.poll.clone(), freeze(p)?))
        })?;
        let digest = frozen.digest();
        let (rules, k) = (poll.config.rules.clone(), poll.config.mixture_k);
        let existing = |state: &State| {
            state.polls[id]
                .snapshots
                .iter()
                .find(|s| s.matches(&digest, seed, &rules, k))
                .cloned()
        };
        if let Some(s) = existing(&self.state.read()) {
            return Ok(s);
        }

        let body = match &frozen {
            Frozen::Ranked { profile, .. } => {
                let results =
                    results_table(profile, &rules).map_err(|e| ServiceError::Compute(e.to_string()))?;
                let mov = rules
                    .iter()
                    .map(|&rule| match margin_of_victory(profile, rule) {
                        Ok(r) => MovEntry::Report(r),
                        Err(e) => MovEntry::Failed { rule, error: e.to_string() },
                    })
                    .collect();
                let (mixture, mixture_error) = match mixture_report(&profile.normalize(), k, seed) {
                    Ok(m) => (Some(m), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SnapshotBody::Ranked { results, mov, mixture, mixture_error }
            }
            Frozen::Allocation { instance } => SnapshotBody::Allocation {
                bundles: serial_dictatorship(instance)
                    .map_err(|e| ServiceError::Compute(e.to_string()))?,
            },
        };

        self.commit(|state| {
            if let Some(s) = existing(state) {
                return Ok((vec![], s));
            }
            let p = &state.polls[id];
            let snapshot = ResultsSnapshot {
                id: format!("{id}-s{}", p.snapshots.len() + 1),
                poll: id.to_string(),
                profile_digest: digest.clone(),
                voters: frozen.voters(),
                seed,
                rules: rules.clone(),
                mixture_k: k,
                body,
                computed_at: now_ms(),
            };
            Ok((vec![Event::SnapshotStored { snapshot: snapshot.clone() }], snapshot))
        })
    }

    pub fn snapshot(&self, id: &str, snapshot: &str) -> Result<ResultsSnapshot, ServiceError> {
        self.read(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            p.snapshots
                .iter()
                .find(|s| s.id == snapshot)
                .cloned()
                .ok_or_else(|| ServiceError::NotFound { what: "snapshot", id: snapshot.to_string() })
        })
    }

    /// Decides the open issue of a multi-issue poll. Without `force`, every
    /// live voter must have voted on it; with `force`, missing voters abstain.
    pub fn advance_multipoll(&self, id: &str, force: bool) -> Result<IssueDecision, ServiceError> {
        self.commit(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            let config = multipoll_config(p)?;
            let issue = p
                .current_issue()
                .ok_or_else(|| ServiceError::PollClosed(id.to_string()))?
                .to_string();
            let voters = p.sequential_voters();
            let missing = missing_live(&voters, &issue);
            if !force && !missing.is_empty() {
                return Err(ServiceError::MissingVotes { issue, voters: missing });
            }
            let voters: Vec<Voter> = voters.into_values().collect();
            let tally = decide_issue(&voters, config, &p.decided(), &issue, force)
                .map_err(|e| ServiceError::Compute(e.to_string()))?;
            let now = now_ms();
            let decision =
                IssueDecision { poll: id.to_string(), tally, forced: force && !missing.is_empty(), decided_at: now };
            let mut events = vec![Event::IssueDecided { decision: decision.clone() }];
            if p.decisions.len() + 1 == config.issue_order.len() {
                events.push(Event::PollClosed { poll: id.to_string(), at: now });
            }
            Ok((events, decision))
        })
    }

    pub fn issue(&self, id: &str, issue: &str) -> Result<IssueView, ServiceError> {
        self.read(|state| {
            let p = state.polls.get(id).ok_or_else(|| ServiceError::poll(id))?;
            let config = multipoll_config(p)?;
            if config.issue(issue).is_none() {
                return Err(ServiceError::NotFound { what: "issue", id: issue.to_string() });
            }
            let decision = p.decisions.iter().find(|d| d.tally.issue == issue).cloned();
            let status = if decision.is_some() {
                IssueStatus::Decided
            } else if p.current_issue() == Some(issue) {
                IssueStatus::Open
            } else {
                IssueStatus::Pending
            };
            let voters = p.sequential_voters();
            let awaiting = missing_live(&voters, issue);
            let live = voters.values().filter(|v| matches!(v, Voter::Live(_))).count();
            Ok(IssueView {
                issue: issue.to_string(),
                status,
                decision,
                live_votes: live - awaiting.len(),
                awaiting,
                cpnet_voters: voters.len() - live,
            })
        })
    }

    // ---- matching sessions -------------------------------------------------

    pub fn create_matching(&self, def: MatchingDefinition) -> Result<MatchingView, ServiceError> {
        if let Some(instance) = &def.instance {
            instance.validate().map_err(|e| ServiceError::InvalidInstance(e.to_string()))?;
        }
        self.commit(|state| {
            let session = MatchingSession {
                id: state.next_matching_id(),
                title: def.title,
                created_by: def.created_by,
                created_at: now_ms(),
                instance: def.instance,
                runs: vec![],
            };
            let view = matching_view(&session);
            Ok((vec![Event::MatchingCreated { session }], view))
        })
    }

    pub fn matching(&self, id: &str) -> Result<MatchingView, ServiceError> {
        self.read(|state| {
            state.matchings.get(id).map(matching_view).ok_or_else(|| ServiceError::matching(id))
        })
    }

    pub fn put_instance(&self, id: &str, instance: MatchingInstance) -> Result<MatchingView, ServiceError> {
        instance.validate().map_err(|e| ServiceError::InvalidInstance(e.to_string()))?;
        self.commit(|state| {
            let mut session = state.matchings.get(id).ok_or_else(|| ServiceError::matching(id))?.clone();
            session.instance = Some(instance.clone());
            Ok((
                vec![Event::InstanceReplaced { session: id.to_string(), instance }],
                matching_view(&session),
            ))
        })
    }

    pub fn edit_instance(&self, id: &str, edits: Vec<InstanceEdit>) -> Result<MatchingView, ServiceError> {
        self.commit(|state| {
            let mut session = state.matchings.get(id).ok_or_else(|| ServiceError::matching(id))?.clone();
            let current = session.instance.as_ref().ok_or_else(|| ServiceError::NoInstance(id.to_string()))?;
            let edited =
                apply_edits(current, &edits).map_err(|e| ServiceError::InvalidInstance(e.to_string()))?;
            session.instance = Some(edited);
            Ok((
                vec![Event::InstanceEdited { session: id.to_string(), edits }],
                matching_view(&session),
            ))
        })
    }

    /// Matches the current instance from scratch and records the outcome as the next run.
    pub fn run_matching(&self, id: &str) -> Result<MatchingRun, ServiceError> {
        self.commit(|state| {
            let session = state.matchings.get(id).ok_or_else(|| ServiceError::matching(id))?;
            let instance = session.instance.as_ref().ok_or_else(|| ServiceError::NoInstance(id.to_string()))?;
            let outcome = stable_match(instance).map_err(|e| ServiceError::InvalidInstance(e.to_string()))?;
            let run = MatchingRun { run: session.runs.len() as u64 + 1, outcome, ran_at: now_ms() };
            Ok((vec![Event::MatchingRan { session: id.to_string(), run: run.clone() }], run))
        })
    }

    /// The latest run, or run number `run`.
    pub fn outcome(&self, id: &str, run: Option<u64>) -> Result<MatchingRun, ServiceError> {
        self.read(|state| {
            let session = state.matchings.get(id).ok_or_else(|| ServiceError::matching(id))?;
            let found = match run {
                Some(n) => session.runs.iter().find(|r| r.run == n),
                None => session.runs.last(),
            };
            match (found, run) {
                (Some(r), _) => Ok(r.clone()),
                (None, Some(n)) => Err(ServiceError::NotFound { what: "run", id: n.to_string() }),
                (None, None) => Err(ServiceError::NoRuns(id.to_string())),
            }
        })
    }

    /// Explanation for `student` from the latest run. With `course`, the
    /// reason for that course alone, ranked or not.
    pub fn explanation(&self, id: &str, student: &str) -> Result<Explanation, ServiceError> {
        let run = self.outcome(id, None)?;
        run.outcome
            .provenance
            .get(student)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound { what: "student", id: student.to_string() })
    }

    pub fn explain_course(
        &self,
        id: &str,
        student: &str,
        course: &str,
    ) -> Result<concord_core::matching::CourseReason, ServiceError> {
        let (run, instance) = self.read(|state| {
            let session = state.matchings.get(id).ok_or_else(|| ServiceError::matching(id))?;
            let run = session.runs.last().ok_or_else(|| ServiceError::NoRuns(id.to_string()))?;
            Ok((run.outcome.clone(), session.instance.clone()))
        })?;
        let instance = instance.ok_or_else(|| ServiceError::NoInstance(id.to_string()))?;
        explain_course(student, course, &run, &instance).map_err(|e| match e {
            concord_core::MatchingError::UnknownStudent(s) => ServiceError::NotFound { what: "student", id: s },
            concord_core::MatchingError::UnknownCourseId(c) => ServiceError::NotFound { what: "course", id: c },
            other => ServiceError::InvalidInstance(other.to_string()),
        })
    }

    /// Latest outcome of a session, for callers that only need the assignment.
    pub fn latest_outcome(&self, id: &str) -> Result<MatchingOutcome, ServiceError> {
        Ok(self.outcome(id, None)?.outcome)
    }
}

fn matching_view(s: &MatchingSession) -> MatchingView {
    MatchingView {
        id: s.id.clone(),
        title: s.title.clone(),
        created_by: s.created_by.clone(),
        instance: s.instance.clone(),
        runs: s.runs.len() as u64,
    }
}

fn multipoll_config(p: &PollState) -> Result<&concord_core::MultiPollConfig, ServiceError> {
    match (&p.poll.kind, &p.poll.config.multipoll) {
        (PollKind::MultiIssue, Some(c)) => Ok(c),
        _ => Err(ServiceError::WrongKind { kind: kind_name(p.poll.kind).into() }),
    }
}

fn missing_live(voters: &BTreeMap<String, Voter>, issue: &str) -> Vec<String> {
    voters
        .iter()
        .filter(|(_, v)| matches!(v, Voter::Live(votes) if !votes.contains_key(issue)))
        .map(|(k, _)| k.clone())
        .collect()
}

fn kind_name(kind: PollKind) -> &'static str {
    match kind {
        PollKind::Single => "single",
        PollKind::MultiIssue => "multi_issue",
        PollKind::Allocation => "allocation",
        PollKind::Matching => "matching",
    }
}

fn invalid(msg: impl Into<String>) -> ServiceError {
    ServiceError::InvalidDefinition(msg.into())
}

fn validate_definition(def: PollDefinition, state: &State) -> Result<Poll, ServiceError> {
    if def.title.trim().is_empty() {
        return Err(invalid("title is empty"));
    }
    if !def.ui_mode.applies_to(def.kind) {
        return Err(invalid(format!(
            "ui mode {:?} is only available for single polls",
            def.ui_mode
        )));
    }
    let alternatives: Vec<Alternative> = def.alternatives.into_iter().map(Alternative::from).collect();
    let mut config = def.config;
    if config.mixture_k == 0 {
        return Err(invalid("mixture_k must be at least 1"));
    }
    match def.kind {
        PollKind::Single => {
            if alternatives.len() < 2 {
                return Err(invalid("a poll needs at least two alternatives"));
            }
            let ids: BTreeSet<&AltId> = alternatives.iter().map(|a| &a.id).collect();
            if ids.len() != alternatives.len() {
                return Err(invalid("alternative ids must be unique"));
            }
            if config.rules == Rule::default_set() {
                // the default set quietly drops k-approval rules that need more alternatives
                config.rules.retain(|r| r.score_vector(alternatives.len()).is_ok());
            }
            if config.rules.is_empty() {
                return Err(invalid("at least one rule is required"));
            }
            for rule in &config.rules {
                rule.score_vector(alternatives.len())
                    .map_err(|e| invalid(format!("rule {rule}: {e}")))?;
            }
        }
        PollKind::MultiIssue => {
            let mp = config.multipoll.as_ref().ok_or_else(|| invalid("multi_issue polls need a multipoll config"))?;
            if mp.issues.is_empty() {
                return Err(invalid("a multi-issue poll needs at least one issue"));
            }
            mp.validate().map_err(|e| invalid(e.to_string()))?;
            if let Some(template) = &config.cpnet_template {
                mp.check_net(template, 0).map_err(|e| invalid(format!("cp-net template: {e}")))?;
            }
        }
        PollKind::Allocation => {
            let spec = config.allocation.as_ref().ok_or_else(|| invalid("allocation polls need an allocation spec"))?;
            if spec.types.is_empty() {
                return Err(invalid("an allocation poll needs at least one item type"));
            }
            let types: BTreeSet<&String> = spec.types.iter().collect();
            if types.len() != spec.types.len() || spec.items.keys().collect::<BTreeSet<_>>() != types {
                return Err(invalid("item lists must match the declared types exactly"));
            }
            for (ty, items) in &spec.items {
                let distinct: BTreeSet<&String> = items.iter().collect();
                if distinct.len() != items.len() || items.is_empty() {
                    return Err(invalid(format!("items of `{ty}` must be non-empty and distinct")));
                }
            }
        }
        PollKind::Matching => {
            let session = config
                .matching_session
                .as_ref()
                .ok_or_else(|| invalid("matching polls need a matching_session"))?;
            if !state.matchings.contains_key(session) {
                return Err(invalid(format!("matching session `{session}` does not exist")));
            }
        }
    }
    Ok(Poll {
        id: String::new(),
        title: def.title,
        kind: def.kind,
        ui_mode: def.ui_mode,
        status: PollStatus::Open,
        created_by: def.created_by,
        created_at: 0,
        alternatives,
        config,
    })
}

fn bad(msg: impl Into<String>) -> ServiceError {
    ServiceError::InvalidPayload(msg.into())
}

/// Groups ids by descending value; equal values share a group.
fn order_by_value(values: &BTreeMap<AltId, u32>) -> WeakOrder {
    let mut by_value: BTreeMap<u32, Vec<AltId>> = BTreeMap::new();
    for (id, v) in values {
        by_value.entry(*v).or_default().push(id.clone());
    }
    WeakOrder::new(by_value.into_values().rev()).expect("distinct ids in non-empty groups")
}

fn check_known<'a>(
    poll: &Poll,
    ids: impl IntoIterator<Item = &'a AltId>,
) -> Result<(), ServiceError> {
    for id in ids {
        if !poll.alternatives.iter().any(|a| &a.id == id) {
            return Err(bad(format!("unknown alternative `{id}`")));
        }
    }
    Ok(())
}

/// Checks the payload against the poll and returns the derived order for
/// ordinal payloads.
fn validate_payload(p: &PollState, payload: &Payload) -> Result<Option<WeakOrder>, ServiceError> {
    let poll = &p.poll;
    let mismatch = || {
        bad(format!(
            "payload `{}` does not fit a {} poll in {:?} mode",
            payload.kind_name(),
            kind_name(poll.kind),
            poll.ui_mode
        ))
    };
    match (poll.kind, payload) {
        (PollKind::Single, Payload::Ranking { order }) => {
            if !matches!(poll.ui_mode, UiMode::OneColumn | UiMode::TwoColumn) {
                return Err(mismatch());
            }
            check_known(poll, order.ids())?;
            if poll.ui_mode == UiMode::OneColumn && order.ids().count() != poll.alternatives.len() {
                return Err(bad("a one-column ballot must rank every alternative"));
            }
            Ok(Some(order.clone()))
        }
        (PollKind::Single, Payload::Sliders { values }) | (PollKind::Single, Payload::Stars { values }) => {
            let (mode, max) = match payload {
                Payload::Sliders { .. } => (UiMode::Sliders, 100),
                _ => (UiMode::Stars, 10),
            };
            if poll.ui_mode != mode {
                return Err(mismatch());
            }
            check_known(poll, values.keys())?;
            if let Some((id, v)) = values.iter().find(|(_, v)| **v > max) {
                return Err(bad(format!("value {v} for `{id}` is above {max}")));
            }
            Ok(Some(order_by_value(values)))
        }
        (PollKind::Single, Payload::Approval { approved }) => {
            if poll.ui_mode != UiMode::YesNo {
                return Err(mismatch());
            }
            check_known(poll, approved)?;
            let approved: BTreeSet<AltId> = approved.iter().cloned().collect();
            let rest: BTreeSet<AltId> = poll
                .alternatives
                .iter()
                .map(|a| a.id.clone())
                .filter(|id| !approved.contains(id))
                .collect();
            let groups: Vec<BTreeSet<AltId>> =
                [approved, rest].into_iter().filter(|g| !g.is_empty()).collect();
            Ok(Some(WeakOrder::new(groups).expect("disjoint non-empty groups")))
        }
        (PollKind::MultiIssue, Payload::CpNet { net }) => {
            let config = multipoll_config(p)?;
            config.check_net(net, 0).map_err(|e| bad(e.to_string()))?;
            Ok(None)
        }
        (PollKind::MultiIssue, Payload::IssueVote { issue, value }) => {
            let config = multipoll_config(p)?;
            let current = p.current_issue().ok_or_else(|| ServiceError::PollClosed(poll.id.clone()))?;
            if issue != current {
                return Err(bad(format!("issue `{issue}` is not open; `{current}` is")));
            }
            let spec = config.issue(issue).expect("open issue is declared");
            if !spec.has_value(value) {
                return Err(bad(format!("`{value}` is not a value of `{issue}`")));
            }
            Ok(None)
        }
        (PollKind::Allocation, Payload::Allocation { rankings }) => {
            let spec = poll.config.allocation.as_ref().expect("validated at creation");
            validate_allocation_prefs(spec, rankings)?;
            Ok(None)
        }
        (PollKind::Matching, _) => Err(ServiceError::WrongKind { kind: "matching".into() }),
        _ => Err(mismatch()),
    }
}

fn validate_allocation_prefs(
    spec: &AllocationSpec,
    rankings: &BTreeMap<String, Vec<concord_core::combinatorial::ConditionalRanking>>,
) -> Result<(), ServiceError> {
    if rankings.keys().collect::<BTreeSet<_>>() != spec.types.iter().collect::<BTreeSet<_>>() {
        return Err(bad("rankings must be given for exactly the poll's item types"));
    }
    for (t, ty) in spec.types.iter().enumerate() {
        let rows = &rankings[ty];
        if rows.is_empty() {
            return Err(bad(format!("no ranking for `{ty}`")));
        }
        let items: BTreeSet<&String> = spec.items[ty].iter().collect();
        for row in rows {
            if row.ranking.len() != items.len() || row.ranking.iter().collect::<BTreeSet<_>>() != items {
                return Err(bad(format!("a ranking of `{ty}` must list every item once")));
            }
            for (on, value) in &row.when {
                if !spec.types[..t].contains(on) || !spec.items[on].contains(value) {
                    return Err(bad(format!("condition {on}={value} does not refer to an earlier type")));
                }
            }
        }
        if !rows.iter().any(|r| r.when.is_empty()) {
            // every combination of earlier picks must be covered; an
            // unconditional fallback row is the simple way to guarantee it
            let earlier = &spec.types[..t];
            let covered = all_picks(spec, earlier).iter().all(|picks| {
                rows.iter().any(|r| r.when.iter().all(|(k, v)| picks.get(k) == Some(v)))
            });
            if !covered {
                return Err(bad(format!("rankings of `{ty}` do not cover every earlier pick")));
            }
        }
    }
    Ok(())
}

fn all_picks(spec: &AllocationSpec, types: &[String]) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for ty in types {
        out = out
            .into_iter()
            .flat_map(|partial| {
                spec.items[ty].iter().map(move |item| {
                    let mut next = partial.clone();
                    next.insert(ty.clone(), item.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// Copies the effective ballots into a results input.
fn freeze(p: &PollState) -> Result<Frozen, ServiceError> {
    let effective = p.effective();
    if effective.is_empty() {
        return Err(ServiceError::NoBallots(p.poll.id.clone()));
    }
    match p.poll.kind {
        PollKind::Single => {
            let universe: BTreeSet<AltId> = p.poll.alternatives.iter().map(|a| a.id.clone()).collect();
            let ballots = effective
                .iter()
                .map(|(voter, b)| {
                    let order = b.derived.as_ref().expect("ordinal ballots carry a derived order");
                    let full = complete_with_unranked(order, &universe).expect("ids were validated");
                    Ballot::new(*voter, full, 1)
                })
                .collect();
            let profile = PreferenceProfile::new(p.poll.alternatives.clone(), ballots)
                .map_err(|e| ServiceError::Compute(e.to_string()))?;
            Ok(Frozen::Ranked { profile, voters: effective.len() as u64 })
        }
        PollKind::Allocation => {
            let spec = p.poll.config.allocation.as_ref().expect("validated at creation");
            let mut order: Vec<&str> = spec
                .priority
                .iter()
                .map(String::as_str)
                .filter(|v| effective.contains_key(v))
                .collect();
            for b in &p.ballots {
                if !order.contains(&b.voter.as_str()) {
                    order.push(&b.voter);
                }
            }
            let agents = order
                .into_iter()
                .map(|voter| match &effective[voter].payload {
                    Payload::Allocation { rankings } => AgentPreferences {
                        agent: voter.to_string(),
                        rankings: rankings.clone(),
                    },
                    _ => unreachable!("allocation polls only accept allocation payloads"),
                })
                .collect();
            Ok(Frozen::Allocation {
                instance: AllocationInstance {
                    types: spec.types.clone(),
                    items: spec.items.clone(),
                    agents,
                },
            })
        }
        kind => Err(ServiceError::WrongKind { kind: kind_name(kind).into() }),
    }
}
