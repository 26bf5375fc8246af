//! Mentor-to-course matching.
//!
//! Courses score students by a dot product of course weights and student
//! features, then run course-proposing deferred acceptance with capacities.
//! Pinned students are placed first and take seats out of the process.

mod explain;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use explain::{explain, explain_course, CourseReason, Explanation, Reason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<Feature>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentApplication {
    pub student: String,
    pub features: Vec<f64>,
    /// Most preferred first. Courses not listed are unacceptable.
    #[serde(default)]
    pub course_ranking: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CourseSpec {
    pub course: String,
    pub weights: Vec<f64>,
    pub capacity: usize,
    #[serde(default)]
    pub pinned: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchingInstance {
    pub schema: FeatureSchema,
    pub courses: Vec<CourseSpec>,
    pub students: Vec<StudentApplication>,
}

/// Lowest-ranked student admitted through deferred acceptance to a full course.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub score: f64,
    pub student: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingOutcome {
    /// `None` for unmatched students.
    pub assignment: BTreeMap<String, Option<String>>,
    /// Each roster is in the course's preference order.
    pub course_rosters: BTreeMap<String, Vec<String>>,
    pub cutoffs: BTreeMap<String, Cutoff>,
    pub provenance: BTreeMap<String, Explanation>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("feature names must be unique and every range needs min < max (feature `{0}`)")]
    BadSchema(String),
    #[error("{what} has {got} values but the schema has {expected} features")]
    LengthMismatch { what: String, got: usize, expected: usize },
    #[error("student `{student}`: feature `{feature}` value {value} is outside its range")]
    FeatureOutOfRange { student: String, feature: String, value: f64 },
    #[error("{0} contains a non-finite number")]
    NonFinite(String),
    #[error("student `{0}` is listed twice")]
    DuplicateStudent(String),
    #[error("course `{0}` is listed twice")]
    DuplicateCourse(String),
    #[error("student `{student}` ranks course `{course}` twice")]
    DuplicateRanking { student: String, course: String },
    #[error("student `{student}` ranks unknown course `{course}`")]
    UnknownCourse { student: String, course: String },
    #[error("course `{course}` pins unknown student `{student}`")]
    UnknownPinnedStudent { course: String, student: String },
    #[error("course `{course}` pins {pinned} students but has capacity {capacity}")]
    PinOverCapacity { course: String, pinned: usize, capacity: usize },
    #[error("student `{0}` is pinned more than once")]
    PinnedTwice(String),
    #[error("unknown student `{0}`")]
    UnknownStudent(String),
    #[error("unknown course `{0}`")]
    UnknownCourseId(String),
}

/// Dot product of course weights and student features.
pub fn student_score(weights: &[f64], features: &[f64]) -> Result<f64, MatchingError> {
    if weights.len() != features.len() {
        return Err(MatchingError::LengthMismatch {
            what: "feature vector".to_string(),
            got: features.len(),
            expected: weights.len(),
        });
    }
    Ok(weights.iter().zip(features).map(|(w, f)| w * f).sum())
}

/// Descending score, then ascending student token.
fn rank_cmp(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Every student ordered by this course's preference.
pub fn course_preference_list(
    course: &CourseSpec,
    students: &[StudentApplication],
) -> Result<Vec<String>, MatchingError> {
    let mut scored = students
        .iter()
        .map(|s| Ok((student_score(&course.weights, &s.features)?, s.student.as_str())))
        .collect::<Result<Vec<_>, MatchingError>>()?;
    scored.sort_by(|a, b| rank_cmp(*a, *b));
    Ok(scored.into_iter().map(|(_, s)| s.to_string()).collect())
}

impl MatchingInstance {
    pub fn student(&self, id: &str) -> Option<&StudentApplication> {
        self.students.iter().find(|s| s.student == id)
    }

    pub fn course(&self, id: &str) -> Option<&CourseSpec> {
        self.courses.iter().find(|c| c.course == id)
    }

    /// Student -> course for every pin.
    pub fn pins(&self) -> BTreeMap<&str, &str> {
        self.courses
            .iter()
            .flat_map(|c| c.pinned.iter().map(move |s| (s.as_str(), c.course.as_str())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), MatchingError> {
        let dims = self.schema.features.len();
        let mut names = BTreeSet::new();
        for f in &self.schema.features {
            if !names.insert(f.name.as_str()) || f.min.partial_cmp(&f.max) != Some(std::cmp::Ordering::Less) {
                return Err(MatchingError::BadSchema(f.name.clone()));
            }
        }
        let mut courses = BTreeSet::new();
        for c in &self.courses {
            if !courses.insert(c.course.as_str()) {
                return Err(MatchingError::DuplicateCourse(c.course.clone()));
            }
            if c.weights.len() != dims {
                return Err(MatchingError::LengthMismatch {
                    what: format!("course `{}` weights", c.course),
                    got: c.weights.len(),
                    expected: dims,
                });
            }
            if c.weights.iter().any(|w| !w.is_finite()) {
                return Err(MatchingError::NonFinite(format!("course `{}` weights", c.course)));
            }
        }
        let mut students = BTreeSet::new();
        for s in &self.students {
            if !students.insert(s.student.as_str()) {
                return Err(MatchingError::DuplicateStudent(s.student.clone()));
            }
            if s.features.len() != dims {
                return Err(MatchingError::LengthMismatch {
                    what: format!("student `{}` features", s.student),
                    got: s.features.len(),
                    expected: dims,
                });
            }
            for (f, &value) in self.schema.features.iter().zip(&s.features) {
                if !value.is_finite() {
                    return Err(MatchingError::NonFinite(format!("student `{}` features", s.student)));
                }
                if value < f.min || value > f.max {
                    return Err(MatchingError::FeatureOutOfRange {
                        student: s.student.clone(),
                        feature: f.name.clone(),
                        value,
                    });
                }
            }
            let mut ranked = BTreeSet::new();
            for c in &s.course_ranking {
                if !courses.contains(c.as_str()) {
                    return Err(MatchingError::UnknownCourse {
                        student: s.student.clone(),
                        course: c.clone(),
                    });
                }
                if !ranked.insert(c) {
                    return Err(MatchingError::DuplicateRanking {
                        student: s.student.clone(),
                        course: c.clone(),
                    });
                }
            }
        }
        let mut pinned = BTreeSet::new();
        for c in &self.courses {
            if c.pinned.len() > c.capacity {
                return Err(MatchingError::PinOverCapacity {
                    course: c.course.clone(),
                    pinned: c.pinned.len(),
                    capacity: c.capacity,
                });
            }
            for s in &c.pinned {
                if !students.contains(s.as_str()) {
                    return Err(MatchingError::UnknownPinnedStudent {
                        course: c.course.clone(),
                        student: s.clone(),
                    });
                }
                if !pinned.insert(s.as_str()) {
                    return Err(MatchingError::PinnedTwice(s.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Course-proposing deferred acceptance with capacities and pins.
pub fn stable_match(instance: &MatchingInstance) -> Result<MatchingOutcome, MatchingError> {
    instance.validate()?;
    let pins = instance.pins();
    let participants: Vec<usize> = (0..instance.students.len())
        .filter(|&s| !pins.contains_key(instance.students[s].student.as_str()))
        .collect();

    // scores[c][s] for every course and student.
    let scores: Vec<Vec<f64>> = instance
        .courses
        .iter()
        .map(|c| {
            instance
                .students
                .iter()
                .map(|s| student_score(&c.weights, &s.features))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let course_index: BTreeMap<&str, usize> = instance
        .courses
        .iter()
        .enumerate()
        .map(|(i, c)| (c.course.as_str(), i))
        .collect();
    // student_rank[s][c] = position of course c in s's ranking.
    let student_rank: Vec<BTreeMap<usize, usize>> = instance
        .students
        .iter()
        .map(|s| {
            s.course_ranking
                .iter()
                .enumerate()
                .map(|(r, c)| (course_index[c.as_str()], r))
                .collect()
        })
        .collect();

    let proposal_lists: Vec<Vec<usize>> = (0..instance.courses.len())
        .map(|c| {
            let mut list = participants.clone();
            list.sort_by(|&a, &b| {
                rank_cmp(
                    (scores[c][a], &instance.students[a].student),
                    (scores[c][b], &instance.students[b].student),
                )
            });
            list
        })
        .collect();

    let mut free: Vec<usize> = instance
        .courses
        .iter()
        .map(|c| c.capacity - c.pinned.len())
        .collect();
    let mut next = vec![0usize; instance.courses.len()];
    let mut held: Vec<Option<usize>> = vec![None; instance.students.len()];
    let mut queue: VecDeque<usize> = (0..instance.courses.len()).filter(|&c| free[c] > 0).collect();

    while let Some(c) = queue.pop_front() {
        while free[c] > 0 && next[c] < proposal_lists[c].len() {
            let s = proposal_lists[c][next[c]];
            next[c] += 1;
            let Some(&rank) = student_rank[s].get(&c) else {
                continue;
            };
            match held[s] {
                None => {
                    held[s] = Some(c);
                    free[c] -= 1;
                }
                Some(current) if rank < student_rank[s][&current] => {
                    held[s] = Some(c);
                    free[c] -= 1;
                    free[current] += 1;
                    queue.push_back(current);
                }
                Some(_) => {}
            }
        }
    }

    let mut assignment = BTreeMap::new();
    let mut rosters: BTreeMap<String, Vec<usize>> = instance
        .courses
        .iter()
        .map(|c| (c.course.clone(), Vec::new()))
        .collect();
    for (s, student) in instance.students.iter().enumerate() {
        let course = match pins.get(student.student.as_str()) {
            Some(&c) => Some(course_index[c]),
            None => held[s],
        };
        if let Some(c) = course {
            rosters
                .get_mut(&instance.courses[c].course)
                .expect("roster per course")
                .push(s);
        }
        assignment.insert(
            student.student.clone(),
            course.map(|c| instance.courses[c].course.clone()),
        );
    }

    let mut cutoffs = BTreeMap::new();
    let mut course_rosters = BTreeMap::new();
    for (name, mut members) in rosters {
        let c = course_index[name.as_str()];
        members.sort_by(|&a, &b| {
            rank_cmp(
                (scores[c][a], &instance.students[a].student),
                (scores[c][b], &instance.students[b].student),
            )
        });
        let spec = &instance.courses[c];
        if spec.capacity > 0 && members.len() == spec.capacity {
            if let Some(&last) = members
                .iter()
                .rev()
                .find(|&&s| !spec.pinned.contains(&instance.students[s].student))
            {
                cutoffs.insert(
                    name.clone(),
                    Cutoff {
                        score: scores[c][last],
                        student: instance.students[last].student.clone(),
                    },
                );
            }
        }
        course_rosters.insert(
            name,
            members.into_iter().map(|s| instance.students[s].student.clone()).collect(),
        );
    }

    let mut outcome = MatchingOutcome {
        assignment,
        course_rosters,
        cutoffs,
        provenance: BTreeMap::new(),
    };
    let provenance = instance
        .students
        .iter()
        .map(|s| Ok((s.student.clone(), explain(&s.student, &outcome, instance)?)))
        .collect::<Result<_, MatchingError>>()?;
    outcome.provenance = provenance;
    Ok(outcome)
}

/// Administrative change to an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum InstanceEdit {
    SetWeights { course: String, weights: Vec<f64> },
    SetCapacity { course: String, capacity: usize },
    AddStudent { application: StudentApplication },
    RemoveStudent { student: String },
    /// Moves any existing pin of the student to `course`.
    Pin { student: String, course: String },
    Unpin { student: String },
}

/// Applies edits in order and validates the result.
pub fn apply_edits(
    instance: &MatchingInstance,
    edits: &[InstanceEdit],
) -> Result<MatchingInstance, MatchingError> {
    let mut out = instance.clone();
    for edit in edits {
        match edit {
            InstanceEdit::SetWeights { course, weights } => {
                course_mut(&mut out, course)?.weights = weights.clone();
            }
            InstanceEdit::SetCapacity { course, capacity } => {
                course_mut(&mut out, course)?.capacity = *capacity;
            }
            InstanceEdit::AddStudent { application } => {
                if out.student(&application.student).is_some() {
                    return Err(MatchingError::DuplicateStudent(application.student.clone()));
                }
                out.students.push(application.clone());
            }
            InstanceEdit::RemoveStudent { student } => {
                let before = out.students.len();
                out.students.retain(|s| &s.student != student);
                if out.students.len() == before {
                    return Err(MatchingError::UnknownStudent(student.clone()));
                }
                for c in &mut out.courses {
                    c.pinned.retain(|s| s != student);
                }
            }
            InstanceEdit::Pin { student, course } => {
                if out.student(student).is_none() {
                    return Err(MatchingError::UnknownStudent(student.clone()));
                }
                for c in &mut out.courses {
                    c.pinned.retain(|s| s != student);
                }
                course_mut(&mut out, course)?.pinned.push(student.clone());
            }
            InstanceEdit::Unpin { student } => {
                for c in &mut out.courses {
                    c.pinned.retain(|s| s != student);
                }
            }
        }
    }
    out.validate()?;
    Ok(out)
}

fn course_mut<'a>(
    instance: &'a mut MatchingInstance,
    course: &str,
) -> Result<&'a mut CourseSpec, MatchingError> {
    instance
        .courses
        .iter_mut()
        .find(|c| c.course == course)
        .ok_or_else(|| MatchingError::UnknownCourseId(course.to_string()))
}

/// Applies edits and recomputes the matching from scratch.
pub fn rematch(
    instance: &MatchingInstance,
    edits: &[InstanceEdit],
) -> Result<(MatchingInstance, MatchingOutcome), MatchingError> {
    let edited = apply_edits(instance, edits)?;
    let outcome = stable_match(&edited)?;
    Ok((edited, outcome))
}
