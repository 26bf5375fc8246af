//! Random instances.

use concord_core::combinatorial::{CpNet, CptRow, Issue};
use concord_core::matching::{CourseSpec, Feature, FeatureSchema, MatchingInstance, StudentApplication};
use concord_core::{AltId, WeakOrder};
use concord_core::PreferenceProfile;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn alt_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("a{i}")).collect()
}

/// Random weak order over a random subset of `names`; with `ties` false every
/// group is a singleton. `partial` allows leaving alternatives unranked.
pub fn weak_order<R: Rng>(rng: &mut R, names: &[String], ties: bool, partial: bool) -> WeakOrder {
    let mut shuffled: Vec<&String> = names.iter().collect();
    shuffled.shuffle(rng);
    let keep = if partial { rng.random_range(1..=names.len()) } else { names.len() };
    let mut groups: Vec<Vec<AltId>> = Vec::new();
    for id in &shuffled[..keep] {
        let id = AltId::new(id.as_str()).expect("generated ids are valid");
        match groups.last_mut() {
            Some(last) if ties && rng.random_bool(0.35) => last.push(id),
            _ => groups.push(vec![id]),
        }
    }
    WeakOrder::new(groups).expect("non-empty disjoint groups")
}

pub struct ProfileShape {
    pub m: std::ops::RangeInclusive<usize>,
    pub n: std::ops::RangeInclusive<usize>,
    pub ties: bool,
    pub partial: bool,
    /// Each ballot gets weight 1 when false, otherwise 1..=3.
    pub weighted: bool,
}

pub fn profile<R: Rng>(rng: &mut R, shape: &ProfileShape) -> PreferenceProfile {
    let m = rng.random_range(shape.m.clone());
    let n = rng.random_range(shape.n.clone());
    let names = alt_names(m);
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut ballots = Vec::new();
    let mut voters = 0;
    while voters < n {
        let w = if shape.weighted { rng.random_range(1..=3).min(n - voters) } else { 1 };
        voters += w;
        ballots.push((w as u64, weak_order(rng, &names, shape.ties, shape.partial)));
    }
    PreferenceProfile::from_orders(&name_refs, ballots).expect("valid generated profile")
}

/// Random CP-net whose parents always come earlier in `order`, so it is legal
/// for that order. Issues are yes/no.
pub fn legal_cpnet<R: Rng>(rng: &mut R, order: &[String], max_parents: usize) -> CpNet {
    let issues: Vec<Issue> = order.iter().map(|id| Issue::yes_no(id.clone())).collect();
    let mut net = CpNet { issues, ..CpNet::default() };
    for (i, id) in order.iter().enumerate() {
        let mut parents: Vec<String> = order[..i]
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .cloned()
            .collect();
        parents.truncate(max_parents);
        let mut rows = Vec::new();
        for mask in 0..(1usize << parents.len()) {
            let condition = parents
                .iter()
                .enumerate()
                .map(|(b, p)| (p.clone(), if mask >> b & 1 == 1 { "yes" } else { "no" }.to_string()))
                .collect();
            let order = if rng.random_bool(0.5) {
                ["yes".to_string(), "no".to_string()]
            } else {
                ["no".to_string(), "yes".to_string()]
            };
            rows.push(CptRow { condition, order });
        }
        if !parents.is_empty() {
            net.parents.insert(id.clone(), parents);
        }
        net.cpt.insert(id.clone(), rows);
    }
    net
}

pub struct MatchingShape {
    pub courses: std::ops::RangeInclusive<usize>,
    pub students: std::ops::RangeInclusive<usize>,
    pub features: usize,
    pub max_capacity: usize,
    /// Probability that a student gets pinned somewhere with room.
    pub pin_rate: f64,
    /// Draw features from a small integer grid so score ties happen.
    pub coarse: bool,
}

pub fn matching_instance<R: Rng>(rng: &mut R, shape: &MatchingShape) -> MatchingInstance {
    let nc = rng.random_range(shape.courses.clone());
    let ns = rng.random_range(shape.students.clone());
    let schema = FeatureSchema {
        features: (0..shape.features)
            .map(|f| Feature { name: format!("f{f}"), min: 0.0, max: 10.0 })
            .collect(),
    };
    let draw = |rng: &mut R| -> f64 {
        if shape.coarse {
            rng.random_range(0..=3) as f64
        } else {
            rng.random_range(0.0..10.0)
        }
    };
    let mut courses: Vec<CourseSpec> = (0..nc)
        .map(|c| CourseSpec {
            course: format!("c{c}"),
            weights: (0..shape.features).map(|_| draw(rng)).collect(),
            capacity: rng.random_range(0..=shape.max_capacity),
            pinned: vec![],
        })
        .collect();
    let course_ids: Vec<String> = courses.iter().map(|c| c.course.clone()).collect();
    let students: Vec<StudentApplication> = (0..ns)
        .map(|s| {
            let mut ranking = course_ids.clone();
            ranking.shuffle(rng);
            ranking.truncate(rng.random_range(0..=nc));
            StudentApplication {
                student: format!("s{s:02}"),
                features: (0..shape.features).map(|_| draw(rng)).collect(),
                course_ranking: ranking,
            }
        })
        .collect();
    for s in &students {
        if nc > 0 && rng.random_bool(shape.pin_rate) {
            let c = rng.random_range(0..nc);
            if courses[c].pinned.len() < courses[c].capacity {
                courses[c].pinned.push(s.student.clone());
            }
        }
    }
    MatchingInstance { schema, courses, students }
}
