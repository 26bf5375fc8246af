//! Stability checks, exhaustive enumeration of stable matchings and an
//! explanation checker.

use std::collections::{BTreeMap, BTreeSet};

use concord_core::matching::{Explanation, MatchingInstance, MatchingOutcome, Reason};

fn score(instance: &MatchingInstance, course: &str, student: &str) -> f64 {
    let c = instance.courses.iter().find(|c| c.course == course).expect("course");
    let s = instance.students.iter().find(|s| s.student == student).expect("student");
    c.weights.iter().zip(&s.features).map(|(w, f)| w * f).sum()
}

/// True when `course` ranks `a` strictly above `b`.
fn course_prefers(instance: &MatchingInstance, course: &str, a: &str, b: &str) -> bool {
    let (sa, sb) = (score(instance, course, a), score(instance, course, b));
    sa > sb || (sa == sb && a < b)
}

fn pinned(instance: &MatchingInstance) -> BTreeMap<String, String> {
    instance
        .courses
        .iter()
        .flat_map(|c| c.pinned.iter().map(move |s| (s.clone(), c.course.clone())))
        .collect()
}

/// Position of `course` in the student's ranking; `None` if unacceptable.
fn rank(instance: &MatchingInstance, student: &str, course: &str) -> Option<usize> {
    instance
        .students
        .iter()
        .find(|s| s.student == student)
        .and_then(|s| s.course_ranking.iter().position(|c| c == course))
}

/// (student, course) pairs that block `assignment`. Pinned students never
/// block and are never displaced.
pub fn blocking_pairs(
    instance: &MatchingInstance,
    assignment: &BTreeMap<String, Option<String>>,
) -> Vec<(String, String)> {
    let pins = pinned(instance);
    let mut rosters: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (s, c) in assignment {
        if let Some(c) = c {
            rosters.entry(c.as_str()).or_default().push(s.as_str());
        }
    }
    let mut out = Vec::new();
    for app in &instance.students {
        let s = app.student.as_str();
        if pins.contains_key(s) {
            continue;
        }
        let current = assignment
            .get(s)
            .cloned()
            .flatten()
            .and_then(|c| rank(instance, s, &c))
            .unwrap_or(usize::MAX);
        for (r, c) in app.course_ranking.iter().enumerate() {
            if r >= current {
                break;
            }
            let spec = instance.courses.iter().find(|x| &x.course == c).expect("course");
            let roster = rosters.get(c.as_str()).cloned().unwrap_or_default();
            let free = roster.len() < spec.capacity;
            let displaces = roster
                .iter()
                .any(|t| !pins.contains_key(*t) && course_prefers(instance, c, s, t));
            if free || displaces {
                out.push((s.to_string(), c.clone()));
            }
        }
    }
    out
}

/// Every stable matching, found by trying every assignment of the non-pinned
/// students. Only for small instances.
pub fn all_stable_matchings(instance: &MatchingInstance) -> Vec<BTreeMap<String, Option<String>>> {
    let pins = pinned(instance);
    let free: Vec<&concord_core::matching::StudentApplication> = instance
        .students
        .iter()
        .filter(|s| !pins.contains_key(&s.student))
        .collect();
    let mut load: BTreeMap<String, usize> = instance
        .courses
        .iter()
        .map(|c| (c.course.clone(), c.pinned.len()))
        .collect();
    let cap: BTreeMap<String, usize> =
        instance.courses.iter().map(|c| (c.course.clone(), c.capacity)).collect();
    let mut current: BTreeMap<String, Option<String>> =
        pins.iter().map(|(s, c)| (s.clone(), Some(c.clone()))).collect();
    let mut out = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        free: &[&concord_core::matching::StudentApplication],
        instance: &MatchingInstance,
        load: &mut BTreeMap<String, usize>,
        cap: &BTreeMap<String, usize>,
        current: &mut BTreeMap<String, Option<String>>,
        out: &mut Vec<BTreeMap<String, Option<String>>>,
    ) {
        if i == free.len() {
            if blocking_pairs(instance, current).is_empty() {
                out.push(current.clone());
            }
            return;
        }
        let s = &free[i].student;
        current.insert(s.clone(), None);
        go(i + 1, free, instance, load, cap, current, out);
        for c in &free[i].course_ranking {
            if load[c] < cap[c] {
                *load.get_mut(c).expect("course") += 1;
                current.insert(s.clone(), Some(c.clone()));
                go(i + 1, free, instance, load, cap, current, out);
                *load.get_mut(c).expect("course") -= 1;
            }
        }
        current.remove(s);
    }
    go(0, &free, instance, &mut load, &cap, &mut current, &mut out);
    out
}

/// The stable matching every student likes least, assembled student by
/// student from `stable`. Returns `None` if that assembly is not itself one
/// of the stable matchings (which would contradict lattice structure).
pub fn student_pessimal(
    instance: &MatchingInstance,
    stable: &[BTreeMap<String, Option<String>>],
) -> Option<BTreeMap<String, Option<String>>> {
    let first = stable.first()?;
    let mut worst = BTreeMap::new();
    for s in first.keys() {
        let pick = stable
            .iter()
            .map(|m| m[s].clone())
            .max_by_key(|c| c.as_ref().and_then(|c| rank(instance, s, c)).unwrap_or(usize::MAX))
            .expect("non-empty");
        worst.insert(s.clone(), pick);
    }
    stable.contains(&worst).then_some(worst)
}

/// Checks every reason in `e` against the outcome and instance data.
/// Returns a description of the first mismatch.
pub fn verify_explanation(
    e: &Explanation,
    outcome: &MatchingOutcome,
    instance: &MatchingInstance,
) -> Result<(), String> {
    let s = e.student.as_str();
    let app = instance
        .students
        .iter()
        .find(|a| a.student == s)
        .ok_or("unknown student")?;
    let pins = pinned(instance);
    let assigned = outcome.assignment.get(s).cloned().flatten();
    if e.assigned != assigned {
        return Err(format!("{s}: assigned field {:?} != {:?}", e.assigned, assigned));
    }
    let listed: Vec<&String> = e.courses.iter().map(|c| &c.course).collect();
    if listed != app.course_ranking.iter().collect::<Vec<_>>() {
        return Err(format!("{s}: explanation does not cover the ranking in order"));
    }
    for (r, cr) in e.courses.iter().enumerate() {
        let c = cr.course.as_str();
        let fail = |why: &str| Err(format!("{s}/{c}: {why}"));
        if cr.rank != Some(r + 1) {
            return fail("wrong rank");
        }
        match &cr.reason {
            Reason::AssignedHere { pinned: p } => {
                if assigned.as_deref() != Some(c) {
                    return fail("not assigned here");
                }
                if *p != (pins.get(s).map(String::as_str) == Some(c)) {
                    return fail("pinned flag wrong");
                }
            }
            Reason::AssignedHigherRanked { assigned_course: course, assigned_rank: ar } => {
                if assigned.as_deref() != Some(course.as_str()) {
                    return fail("claimed assignment differs");
                }
                if rank(instance, s, course) != Some(ar - 1) || *ar > r {
                    return fail("assigned course is not ranked higher");
                }
            }
            Reason::PinnedElsewhere { pinned_course: course } => {
                if pins.get(s) != Some(course) || course == c {
                    return fail("not pinned elsewhere");
                }
            }
            Reason::NotRanked => return fail("ranked course reported as not ranked"),
            Reason::CapacityFilled { cutoff, student_score } => {
                if pins.contains_key(s) || assigned.as_deref() == Some(c) {
                    return fail("capacity reason for a pinned or admitted student");
                }
                if let Some(a) = &assigned {
                    if rank(instance, s, a).is_some_and(|ar| ar < r) {
                        return fail("student got a higher-ranked course");
                    }
                }
                let spec = instance.courses.iter().find(|x| x.course == c).ok_or("course")?;
                let roster = outcome.course_rosters.get(c).cloned().unwrap_or_default();
                if roster.len() != spec.capacity {
                    return fail("course is not full");
                }
                if *student_score != score(instance, c, s) {
                    return fail("student score is not the dot product");
                }
                let admitted: Vec<&String> =
                    roster.iter().filter(|t| !pins.contains_key(*t)).collect();
                match cutoff {
                    None => {
                        if !admitted.is_empty() {
                            return fail("missing cutoff on a course with admitted students");
                        }
                    }
                    Some(cut) => {
                        if !admitted.contains(&&cut.student) {
                            return fail("cutoff student is not admitted here");
                        }
                        if cut.score != score(instance, c, &cut.student) {
                            return fail("cutoff score is not the dot product");
                        }
                        if admitted
                            .iter()
                            .any(|t| course_prefers(instance, c, &cut.student, t))
                        {
                            return fail("cutoff is not the lowest admitted student");
                        }
                        if !course_prefers(instance, c, &cut.student, s) {
                            return fail("student ranks above the cutoff");
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Argmax of a course's scores over a set of students (ties to smaller token).
pub fn top_student(instance: &MatchingInstance, course: &str) -> Option<String> {
    let ids: BTreeSet<&String> = instance.students.iter().map(|s| &s.student).collect();
    ids.into_iter()
        .reduce(|a, b| if course_prefers(instance, course, b, a) { b } else { a })
        .cloned()
}
