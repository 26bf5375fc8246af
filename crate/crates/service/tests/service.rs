use std::collections::BTreeMap;

use concord_core::combinatorial::{parse_cpnet, sequential_vote, CpNet, Issue, MultiPollConfig, Voter};
use concord_core::matching::{stable_match, InstanceEdit};
use concord_core::{AltId, WeakOrder};
use concord_service::*;
use concord_testkit::gen::{self, MatchingShape};

fn open(dir: &std::path::Path) -> Service {
    Service::open(dir, ServiceOptions::default()).unwrap()
}

fn single(ids: &[&str], mode: UiMode) -> PollDefinition {
    PollDefinition {
        title: "lunch".into(),
        kind: PollKind::Single,
        ui_mode: mode,
        created_by: "admin".into(),
        alternatives: ids.iter().map(|s| AlternativeInput::Id(AltId::new(*s).unwrap())).collect(),
        config: PollConfig::default(),
    }
}

fn ranking(groups: &[&[&str]]) -> Payload {
    Payload::Ranking { order: WeakOrder::from_strs(groups).unwrap() }
}

fn ids(xs: &[&str]) -> Vec<AltId> {
    xs.iter().map(|s| AltId::new(*s).unwrap()).collect()
}

#[test]
fn poll_definitions_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let poll = s.create_poll(single(&["a", "b", "c"], UiMode::OneColumn)).unwrap();
    assert_eq!(poll.status, PollStatus::Open);
    let other = s.create_poll(single(&["a", "b"], UiMode::YesNo)).unwrap();
    assert_ne!(poll.id, other.id);

    let err = s.create_poll(single(&["a"], UiMode::OneColumn)).unwrap_err();
    assert_eq!(err.code(), "invalid_definition");

    let mut multi = single(&[], UiMode::OneColumn);
    multi.kind = PollKind::MultiIssue;
    multi.config.multipoll = Some(MultiPollConfig {
        issues: vec![Issue::yes_no("x"), Issue::yes_no("y")],
        issue_order: vec!["x".into()],
        tie_break: BTreeMap::new(),
    });
    assert_eq!(s.create_poll(multi.clone()).unwrap_err().code(), "invalid_definition");

    multi.config.multipoll.as_mut().unwrap().issue_order = vec!["x".into(), "y".into()];
    multi.config.cpnet_template = Some(
        parse_cpnet("issue x\nissue y\nparents x: y\nrow y []: yes > no\nrow x [y=yes]: yes > no\nrow x [y=no]: no > yes\n")
            .unwrap(),
    );
    assert_eq!(s.create_poll(multi.clone()).unwrap_err().code(), "invalid_definition");
    multi.config.cpnet_template = None;
    multi.ui_mode = UiMode::Stars;
    assert_eq!(s.create_poll(multi.clone()).unwrap_err().code(), "invalid_definition");
    multi.ui_mode = UiMode::TwoColumn;
    assert!(s.create_poll(multi).is_ok());
}

#[test]
fn resubmission_replaces_and_closed_polls_refuse() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let id = s.create_poll(single(&["a", "b", "c"], UiMode::TwoColumn)).unwrap().id;
    let first = s.submit_ballot(&id, "v1", ranking(&[&["a"]])).unwrap();
    let second = s.submit_ballot(&id, "v1", ranking(&[&["b"], &["c"]])).unwrap();
    assert_eq!((first.revision, second.revision), (1, 2));
    let effective = s.effective_ballots(&id).unwrap();
    assert_eq!(effective.len(), 1);
    assert_eq!(effective[0].revision, 2);
    assert_eq!(s.poll(&id).unwrap().revisions, 2);

    assert_eq!(s.submit_ballot(&id, "v2", ranking(&[&["zzz"]])).unwrap_err().code(), "invalid_payload");
    assert_eq!(
        s.submit_ballot(&id, "v2", Payload::Approval { approved: ids(&["a"]) }).unwrap_err().code(),
        "invalid_payload"
    );
    s.close_poll(&id).unwrap();
    assert_eq!(s.submit_ballot(&id, "v2", ranking(&[&["a"]])).unwrap_err().code(), "poll_closed");
    assert_eq!(s.submit_ballot("nope", "v2", ranking(&[&["a"]])).unwrap_err().code(), "not_found");
}

#[test]
fn derived_orders_for_each_payload() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let yes_no = s.create_poll(single(&["a", "b", "c"], UiMode::YesNo)).unwrap().id;
    let rec = s.submit_ballot(&yes_no, "v", Payload::Approval { approved: ids(&["a", "c"]) }).unwrap();
    assert_eq!(rec.derived.unwrap(), WeakOrder::from_strs(&[&["a", "c"], &["b"]]).unwrap());
    let none = s.submit_ballot(&yes_no, "w", Payload::Approval { approved: vec![] }).unwrap();
    assert_eq!(none.derived.unwrap(), WeakOrder::from_strs(&[&["a", "b", "c"]]).unwrap());

    let sliders = s.create_poll(single(&["a", "b", "c"], UiMode::Sliders)).unwrap().id;
    let values: BTreeMap<AltId, u32> = ids(&["a", "b", "c"]).into_iter().zip([90, 90, 10]).collect();
    let rec = s.submit_ballot(&sliders, "v", Payload::Sliders { values }).unwrap();
    assert_eq!(rec.derived.unwrap(), WeakOrder::from_strs(&[&["a", "b"], &["c"]]).unwrap());
    let too_big: BTreeMap<AltId, u32> = ids(&["a"]).into_iter().zip([101]).collect();
    assert!(s.submit_ballot(&sliders, "v", Payload::Sliders { values: too_big }).is_err());

    let stars = s.create_poll(single(&["a", "b"], UiMode::Stars)).unwrap().id;
    let values: BTreeMap<AltId, u32> = ids(&["a", "b"]).into_iter().zip([7, 3]).collect();
    let rec = s.submit_ballot(&stars, "v", Payload::Stars { values }).unwrap();
    assert_eq!(rec.derived.unwrap(), WeakOrder::from_strs(&[&["a"], &["b"]]).unwrap());

    let one = s.create_poll(single(&["a", "b", "c"], UiMode::OneColumn)).unwrap().id;
    assert!(s.submit_ballot(&one, "v", ranking(&[&["a"]])).is_err());
    assert!(s.submit_ballot(&one, "v", ranking(&[&["a"], &["b", "c"]])).is_ok());
}

#[test]
fn empty_two_column_ballot_is_all_tied() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let id = s.create_poll(single(&["a", "b", "c"], UiMode::TwoColumn)).unwrap().id;
    s.submit_ballot(&id, "v", Payload::Ranking { order: WeakOrder::new(Vec::<Vec<AltId>>::new()).unwrap() })
        .unwrap();
    let snap = s.compute_results(&id, 0).unwrap();
    let SnapshotBody::Ranked { results, .. } = snap.body else { panic!("ranked body") };
    for r in results {
        assert_eq!(r.winners, ids(&["a", "b", "c"]), "{}", r.rule);
    }
}

#[test]
fn results_are_reproducible_and_unanimous_for_one_voter() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let id = s.create_poll(single(&["a", "b", "c", "d"], UiMode::TwoColumn)).unwrap().id;
    assert_eq!(s.compute_results(&id, 1).unwrap_err().code(), "no_ballots");
    s.submit_ballot(&id, "only", ranking(&[&["b", "d"], &["a"]])).unwrap();
    let a = s.compute_results(&id, 7).unwrap();
    let b = s.compute_results(&id, 7).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_eq!(s.poll(&id).unwrap().snapshots.len(), 1);
    let SnapshotBody::Ranked { results, mov, .. } = &a.body else { panic!() };
    for r in results {
        // veto rewards every position but the last, so `a` ties with the top group
        let expected = match r.rule {
            concord_core::Rule::Veto => ids(&["a", "b", "d"]),
            _ => ids(&["b", "d"]),
        };
        assert_eq!(r.winners, expected, "{}", r.rule);
    }
    assert_eq!(mov.len(), results.len());

    let c = s.compute_results(&id, 8).unwrap();
    assert_ne!(c.id, a.id);
    assert_eq!(c.profile_digest, a.profile_digest);
}

fn multi_poll(s: &Service, order: &[&str], tie: &[(&str, &str)]) -> String {
    let mut def = single(&[], UiMode::OneColumn);
    def.kind = PollKind::MultiIssue;
    def.config.multipoll = Some(MultiPollConfig {
        issues: order.iter().map(|i| Issue::yes_no(*i)).collect(),
        issue_order: order.iter().map(|i| i.to_string()).collect(),
        tie_break: tie.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    });
    s.create_poll(def).unwrap().id
}

fn vote(s: &Service, poll: &str, voter: &str, issue: &str, value: &str) {
    s.submit_ballot(poll, voter, Payload::IssueVote { issue: issue.into(), value: value.into() })
        .unwrap();
}

#[test]
fn mixed_population_matches_hand_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let id = multi_poll(&s, &["x", "y"], &[]);
    let flip = "issue x\nissue y\nparents y: x\nrow x []: yes > no\nrow y [x=yes]: no > yes\nrow y [x=no]: yes > no\n";
    let contrarian = "issue x\nissue y\nrow x []: no > yes\nrow y []: yes > no\n";
    for (v, text) in [("A", flip), ("B", flip), ("C", contrarian)] {
        s.submit_ballot(&id, v, Payload::CpNet { net: parse_cpnet(text).unwrap() }).unwrap();
    }
    vote(&s, &id, "L1", "x", "no");
    vote(&s, &id, "L2", "x", "yes");
    // y is not open yet
    assert!(s
        .submit_ballot(&id, "L1", Payload::IssueVote { issue: "y".into(), value: "yes".into() })
        .is_err());

    let x = s.advance_multipoll(&id, false).unwrap();
    assert_eq!((x.tally.outcome.as_str(), x.tally.counts), ("yes", [3, 2]));
    assert_eq!(s.issue(&id, "y").unwrap().awaiting, vec!["L1".to_string(), "L2".to_string()]);
    assert_eq!(s.advance_multipoll(&id, false).unwrap_err().code(), "missing_votes");
    vote(&s, &id, "L1", "y", "yes");
    vote(&s, &id, "L2", "y", "yes");
    let y = s.advance_multipoll(&id, false).unwrap();
    assert_eq!((y.tally.outcome.as_str(), y.tally.counts), ("yes", [3, 2]));
    let view = s.poll(&id).unwrap();
    assert_eq!(view.poll.status, PollStatus::Closed);
    assert_eq!(view.decided["x"], "yes");
    assert_eq!(s.issue(&id, "x").unwrap().status, IssueStatus::Decided);
    assert_eq!(s.advance_multipoll(&id, false).unwrap_err().code(), "poll_closed");
}

#[test]
fn live_tie_and_forced_advance() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let id = multi_poll(&s, &["x"], &[("x", "yes")]);
    vote(&s, &id, "a", "x", "yes");
    vote(&s, &id, "b", "x", "no");
    let d = s.advance_multipoll(&id, false).unwrap();
    assert!(d.tally.tie_broken);
    assert_eq!(d.tally.outcome, "yes");

    let id = multi_poll(&s, &["x", "y"], &[]);
    vote(&s, &id, "a", "x", "yes");
    s.advance_multipoll(&id, false).unwrap();
    let forced = s.advance_multipoll(&id, true).unwrap();
    assert!(forced.forced);
    assert_eq!(forced.tally.abstained, 1);
    assert_eq!(forced.tally.outcome, "no");
}

#[test]
fn cpnet_population_advances_to_one_shot_result() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let mut rng = concord_testkit::rng(51);
    for _ in 0..20 {
        let order: Vec<String> = vec!["p".into(), "q".into(), "r".into()];
        let nets: Vec<CpNet> = (0..4).map(|_| gen::legal_cpnet(&mut rng, &order, 2)).collect();
        let id = multi_poll(&s, &["p", "q", "r"], &[]);
        for (i, net) in nets.iter().enumerate() {
            s.submit_ballot(&id, &format!("v{i}"), Payload::CpNet { net: net.clone() }).unwrap();
        }
        for _ in 0..3 {
            s.advance_multipoll(&id, false).unwrap();
        }
        let voters: Vec<Voter> = nets.into_iter().map(Voter::CpNet).collect();
        let config = MultiPollConfig {
            issues: order.iter().map(|i| Issue::yes_no(i.clone())).collect(),
            issue_order: order.clone(),
            tie_break: BTreeMap::new(),
        };
        let one_shot = sequential_vote(&voters, &config).unwrap();
        assert_eq!(s.poll(&id).unwrap().decided, one_shot.assignment);
    }
}

#[test]
fn matching_sessions_run_and_explain() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let mut rng = concord_testkit::rng(52);
    let inst = gen::matching_instance(
        &mut rng,
        &MatchingShape { courses: 3..=3, students: 8..=8, features: 2, max_capacity: 3, pin_rate: 0.0, coarse: false },
    );
    let m = s.create_matching(MatchingDefinition { title: "fall".into(), created_by: "admin".into(), instance: None }).unwrap();
    assert_eq!(s.run_matching(&m.id).unwrap_err().code(), "no_instance");
    s.put_instance(&m.id, inst.clone()).unwrap();
    let r1 = s.run_matching(&m.id).unwrap();
    let r2 = s.run_matching(&m.id).unwrap();
    assert_eq!((r1.run, r2.run), (1, 2));
    assert_eq!(r1.outcome, r2.outcome);

    let edit = InstanceEdit::SetWeights { course: "c0".into(), weights: vec![0.0, 5.0] };
    let view = s.edit_instance(&m.id, vec![edit]).unwrap();
    let r3 = s.run_matching(&m.id).unwrap();
    assert_eq!(r3.outcome, stable_match(view.instance.as_ref().unwrap()).unwrap());
    assert_eq!(s.outcome(&m.id, Some(1)).unwrap(), r1);

    let student = &inst.students[0].student;
    assert_eq!(&s.explanation(&m.id, student).unwrap(), &r3.outcome.provenance[student]);
    assert_eq!(s.explanation(&m.id, "ghost").unwrap_err().code(), "not_found");

    let mut over = inst.clone();
    over.courses[0].capacity = 0;
    over.courses[0].pinned = vec![student.clone()];
    let err = s.put_instance(&m.id, over).unwrap_err();
    assert_eq!(err.code(), "invalid_instance");
    assert!(err.to_string().contains("c0"), "{err}");
}

#[test]
fn allocation_poll_runs_serial_dictatorship() {
    use concord_core::combinatorial::ConditionalRanking;
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let mut def = single(&[], UiMode::OneColumn);
    def.kind = PollKind::Allocation;
    def.config.allocation = Some(AllocationSpec {
        types: vec!["room".into()],
        items: [("room".to_string(), vec!["r1".to_string(), "r2".to_string()])].into(),
        priority: vec!["bob".into()],
    });
    let id = s.create_poll(def).unwrap().id;
    let prefs = || Payload::Allocation {
        rankings: [(
            "room".to_string(),
            vec![ConditionalRanking { when: BTreeMap::new(), ranking: vec!["r1".into(), "r2".into()] }],
        )]
        .into(),
    };
    s.submit_ballot(&id, "ann", prefs()).unwrap();
    assert_eq!(s.compute_results(&id, 0).unwrap_err().code(), "compute_failed");
    s.submit_ballot(&id, "bob", prefs()).unwrap();
    let snap = s.compute_results(&id, 0).unwrap();
    let SnapshotBody::Allocation { bundles } = snap.body else { panic!() };
    assert_eq!(bundles[0].agent, "bob");
    assert_eq!(bundles[0].items["room"], "r1");
    assert_eq!(bundles[1].items["room"], "r2");
}

#[test]
fn restart_replays_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let digest;
    let snap;
    {
        let s = Service::open(dir.path(), ServiceOptions { checkpoint_every: 3 }).unwrap();
        let id = s.create_poll(single(&["a", "b", "c"], UiMode::TwoColumn)).unwrap().id;
        for (i, order) in [&[&["a"][..], &["b"]][..], &[&["c"]], &[&["b", "c"], &["a"]]].iter().enumerate() {
            s.submit_ballot(&id, &format!("v{i}"), ranking(order)).unwrap();
        }
        s.submit_ballot(&id, "v0", ranking(&[&["c"]])).unwrap();
        snap = s.compute_results(&id, 3).unwrap();
        let m = s.create_matching(MatchingDefinition {
            title: "t".into(),
            created_by: "a".into(),
            instance: Some(gen::matching_instance(&mut concord_testkit::rng(3), &MatchingShape {
                courses: 2..=2, students: 4..=4, features: 1, max_capacity: 2, pin_rate: 0.3, coarse: false,
            })),
        })
        .unwrap();
        s.run_matching(&m.id).unwrap();
        digest = s.state_digest();
    }
    // a crash in the middle of an append leaves a partial last line
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join("events.ndjson")).unwrap();
    f.write_all(b"{\"seq\":99,\"event\":\"ballot_subm").unwrap();
    drop(f);

    let s = open(dir.path());
    assert_eq!(s.state_digest(), digest);
    let again = s.compute_results("poll-1", 3).unwrap();
    assert_eq!(serde_json::to_vec(&again).unwrap(), serde_json::to_vec(&snap).unwrap());
    // the log stays appendable after truncating the torn line
    s.submit_ballot("poll-1", "v9", ranking(&[&["a"]])).unwrap();
    let digest2 = s.state_digest();
    drop(s);
    assert_eq!(open(dir.path()).state_digest(), digest2);
}
