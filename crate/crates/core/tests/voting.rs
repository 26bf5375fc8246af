use std::collections::BTreeSet;

use concord_core::rules::{
    ranked_pairs_fixed_order, stv_fixed_order, Rational,
};
use concord_core::{
    complete_with_unranked, pairwise_margins, parse_profile, results_table, rule_winners,
    serialize_profile, AltId, PreferenceProfile, Rule, WeakOrder,
};
use concord_testkit::gen::{self, ProfileShape};
use concord_testkit::voting::{self as oracle, RawProfile};
use proptest::prelude::*;

const FRUIT: &str = "alternatives: apple,banana,cherry\n\
3: cherry > apple > banana\n\
2: apple > banana > cherry\n\
2: banana > apple > cherry\n";

fn winners(p: &PreferenceProfile, rule: Rule) -> BTreeSet<String> {
    rule_winners(p, rule)
        .unwrap()
        .winners
        .iter()
        .map(|a| a.as_str().to_string())
        .collect()
}

/// Rules from the default set whose score vector exists for `m` alternatives.
fn applicable(m: usize) -> Vec<Rule> {
    Rule::default_set()
        .into_iter()
        .filter(|r| r.score_vector(m).is_ok())
        .collect()
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn fruit_profile_under_every_rule() {
    let p = parse_profile(FRUIT).unwrap();
    assert_eq!(winners(&p, Rule::Plurality), set(&["cherry"]));
    assert_eq!(winners(&p, Rule::Borda), set(&["apple"]));
    assert_eq!(winners(&p, Rule::Veto), set(&["apple"]));
    assert_eq!(winners(&p, Rule::RankedPairsPut), set(&["apple"]));
    assert_eq!(winners(&p, Rule::StvPut), set(&["apple", "banana"]));
    let table = results_table(&p, &Rule::default_set()).unwrap();
    assert_eq!(table.len(), Rule::default_set().len());
}

#[test]
fn pairwise_counts_small_example() {
    let p = parse_profile("alternatives: a,b,c\n2: a > b > c\n1: c > a > b\n").unwrap();
    let n = pairwise_margins(&p);
    assert_eq!(n.by_id("a", "b"), Some(3));
    assert_eq!(n.by_id("b", "c"), Some(2));
    assert_eq!(n.by_id("c", "a"), Some(1));
    assert_eq!(n.by_id("b", "a"), Some(0));
}

#[test]
fn tied_group_scores_mean_of_positions() {
    let p = parse_profile("alternatives: a,b,c,d\n1: a = b > c\n").unwrap();
    assert!(rule_winners(&p, Rule::KApproval(4)).is_err());
    let r = rule_winners(&p, Rule::Borda).unwrap();
    let scores = r.scores.unwrap();
    let get = |id: &str| scores[id].0;
    assert_eq!(get("a"), Rational::new(5, 2));
    assert_eq!(get("b"), Rational::new(5, 2));
    assert_eq!(get("c"), Rational::from_integer(1));
    assert_eq!(get("d"), Rational::from_integer(0));
}

fn shape_small() -> ProfileShape {
    ProfileShape { m: 2..=5, n: 1..=20, ties: true, partial: true, weighted: true }
}

#[test]
fn stv_matches_exhaustive_elimination() {
    let mut rng = concord_testkit::rng(11);
    for case in 0..120 {
        let p = gen::profile(&mut rng, &shape_small());
        let raw = RawProfile::from_profile(&p);
        let expected = raw.names(&oracle::stv_all_winners(&raw));
        assert_eq!(winners(&p, Rule::StvPut), expected, "case {case}\n{}", serialize_profile(&p));
    }
}

#[test]
fn ranked_pairs_matches_block_permutations() {
    let mut rng = concord_testkit::rng(12);
    let shape = ProfileShape { m: 2..=4, n: 1..=9, ties: true, partial: true, weighted: false };
    for case in 0..120 {
        let p = gen::profile(&mut rng, &shape);
        let raw = RawProfile::from_profile(&p);
        let expected = raw.names(&oracle::ranked_pairs_all_winners(&raw));
        assert_eq!(
            winners(&p, Rule::RankedPairsPut),
            expected,
            "case {case}\n{}",
            serialize_profile(&p)
        );
    }
}

#[test]
fn positional_rules_match_direct_scoring() {
    let mut rng = concord_testkit::rng(13);
    for _ in 0..150 {
        let p = gen::profile(&mut rng, &shape_small());
        let raw = RawProfile::from_profile(&p);
        let m = raw.m();
        for (rule, vector) in [
            (Rule::Plurality, oracle::plurality_vector(m)),
            (Rule::Borda, oracle::borda_vector(m)),
            (Rule::Veto, oracle::veto_vector(m)),
        ] {
            let expected = raw.names(&oracle::positional_winners(&raw, &vector));
            assert_eq!(winners(&p, rule), expected, "{rule}");
        }
    }
}

fn arb_profile() -> impl Strategy<Value = PreferenceProfile> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, partial)| {
        let mut rng = concord_testkit::rng(seed);
        gen::profile(
            &mut rng,
            &ProfileShape { m: 1..=5, n: 1..=12, ties: true, partial, weighted: true },
        )
    })
}

fn relabel(p: &PreferenceProfile, perm: &[usize]) -> (PreferenceProfile, Vec<String>) {
    let ids: Vec<String> = p.ids().iter().map(|a| a.as_str().to_string()).collect();
    let new_id = |s: &str| -> String {
        let i = ids.iter().position(|x| x == s).unwrap();
        ids[perm[i]].clone()
    };
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let ballots = p.ballots().iter().map(|b| {
        let groups: Vec<Vec<AltId>> = b
            .order
            .groups()
            .iter()
            .map(|g| g.iter().map(|a| AltId::new(new_id(a.as_str())).unwrap()).collect())
            .collect();
        (b.weight, WeakOrder::new(groups).unwrap())
    });
    let q = PreferenceProfile::from_orders(&refs, ballots).unwrap();
    let mapping = ids.iter().map(|s| new_id(s)).collect();
    (q, mapping)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_preserves_profile(p in arb_profile()) {
        let text = serialize_profile(&p);
        let back = parse_profile(&text).unwrap();
        prop_assert_eq!(serialize_profile(&back), text);
        prop_assert_eq!(back.voter_count(), p.voter_count());
        prop_assert_eq!(pairwise_margins(&back), pairwise_margins(&p));
    }

    #[test]
    fn completion_is_idempotent(p in arb_profile()) {
        let universe = p.universe();
        for b in p.ballots() {
            let once = complete_with_unranked(&b.order, &universe).unwrap();
            prop_assert_eq!(complete_with_unranked(&once, &universe).unwrap(), once.clone());
            prop_assert_eq!(once.ids().count(), universe.len());
        }
    }

    #[test]
    fn pairwise_counts_partition_voters(p in arb_profile()) {
        let n = pairwise_margins(&p);
        let raw = RawProfile::from_profile(&p);
        let total = p.voter_count();
        for x in 0..n.len() {
            for y in 0..n.len() {
                if x == y { continue; }
                let ties: u64 = (0..raw.ballots.len())
                    .filter(|&b| { let pos = raw.positions(b); pos[x] == pos[y] })
                    .map(|b| raw.ballots[b].0)
                    .sum();
                prop_assert_eq!(n.get(x, y) + n.get(y, x) + ties, total);
            }
        }
    }

    #[test]
    fn scores_sum_to_vector_total(p in arb_profile()) {
        let m = p.alternatives().len();
        for rule in [Rule::Plurality, Rule::Borda, Rule::Veto] {
            let s = rule.score_vector(m).unwrap().unwrap();
            let per_voter: Rational = s.entries().iter().sum();
            let r = rule_winners(&p, rule).unwrap();
            let sum: Rational = r.scores.unwrap().values().map(|x| x.0).sum();
            prop_assert_eq!(sum, per_voter * Rational::from_integer(p.voter_count() as i128));
        }
    }

    #[test]
    fn anonymity(p in arb_profile(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = concord_testkit::rng(seed);
        let mut ballots: Vec<(u64, WeakOrder)> =
            p.ballots().iter().map(|b| (b.weight, b.order.clone())).collect();
        ballots.shuffle(&mut rng);
        let ids: Vec<String> = p.ids().iter().map(|a| a.as_str().to_string()).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let q = PreferenceProfile::from_orders(&refs, ballots).unwrap();
        for rule in applicable(p.alternatives().len()) {
            prop_assert_eq!(winners(&p, rule), winners(&q, rule));
        }
    }

    #[test]
    fn neutrality(p in arb_profile(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let m = p.alternatives().len();
        prop_assume!(m > 0);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut concord_testkit::rng(seed));
        let (q, mapping) = relabel(&p, &perm);
        let ids: Vec<String> = p.ids().iter().map(|a| a.as_str().to_string()).collect();
        for rule in applicable(m) {
            let mapped: BTreeSet<String> = winners(&p, rule)
                .iter()
                .map(|w| mapping[ids.iter().position(|x| x == w).unwrap()].clone())
                .collect();
            prop_assert_eq!(mapped, winners(&q, rule), "{}", rule);
        }
    }

    #[test]
    fn put_winners_contain_fixed_order_winner(p in arb_profile()) {
        prop_assume!(!p.alternatives().is_empty() && p.voter_count() > 0);
        let n = p.normalize();
        let ids = p.ids();
        let stv = winners(&p, Rule::StvPut);
        let one = stv_fixed_order(&n).unwrap();
        prop_assert!(stv.contains(ids[one].as_str()));
        let rp = winners(&p, Rule::RankedPairsPut);
        for w in ranked_pairs_fixed_order(&n).unwrap() {
            prop_assert!(rp.contains(ids[w].as_str()));
        }
    }
}

#[test]
fn winners_are_sorted_and_nonempty() {
    let mut rng = concord_testkit::rng(14);
    for _ in 0..50 {
        let p = gen::profile(&mut rng, &shape_small());
        for rule in applicable(p.alternatives().len()) {
            let r = rule_winners(&p, rule).unwrap();
            assert!(!r.winners.is_empty());
            let mut sorted = r.winners.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), r.winners.len());
        }
    }
}
