use serde::{Deserialize, Serialize};

use super::{student_score, Cutoff, MatchingError, MatchingInstance, MatchingOutcome};

/// Why a student did or did not end up in one course.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    AssignedHere {
        pinned: bool,
    },
    /// The student got a course they ranked higher (1-based `assigned_rank`).
    AssignedHigherRanked {
        assigned_course: String,
        assigned_rank: usize,
    },
    /// The course filled with students it ranks above this one. `cutoff` is
    /// absent when every seat is pinned or the capacity is zero.
    CapacityFilled {
        cutoff: Option<Cutoff>,
        student_score: f64,
    },
    PinnedElsewhere {
        pinned_course: String,
    },
    NotRanked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CourseReason {
    pub course: String,
    /// 1-based position in the student's ranking.
    pub rank: Option<usize>,
    #[serde(flatten)]
    pub reason: Reason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub student: String,
    pub assigned: Option<String>,
    pub pinned: bool,
    /// One entry per ranked course, in ranking order.
    pub courses: Vec<CourseReason>,
}

fn reason_for(
    student: &str,
    course: &str,
    outcome: &MatchingOutcome,
    instance: &MatchingInstance,
) -> Result<Reason, MatchingError> {
    let app = instance
        .student(student)
        .ok_or_else(|| MatchingError::UnknownStudent(student.to_string()))?;
    let spec = instance
        .course(course)
        .ok_or_else(|| MatchingError::UnknownCourseId(course.to_string()))?;
    let pins = instance.pins();
    let assigned = outcome.assignment.get(student).cloned().flatten();
    let rank_of = |c: &str| app.course_ranking.iter().position(|x| x == c);

    if let Some(&pinned_to) = pins.get(student) {
        return Ok(if pinned_to == course {
            Reason::AssignedHere { pinned: true }
        } else {
            Reason::PinnedElsewhere {
                pinned_course: pinned_to.to_string(),
            }
        });
    }
    let Some(rank) = rank_of(course) else {
        return Ok(Reason::NotRanked);
    };
    if let Some(assigned) = assigned {
        if assigned == course {
            return Ok(Reason::AssignedHere { pinned: false });
        }
        if let Some(assigned_rank) = rank_of(&assigned) {
            if assigned_rank < rank {
                return Ok(Reason::AssignedHigherRanked {
                    assigned_course: assigned,
                    assigned_rank: assigned_rank + 1,
                });
            }
        }
    }
    Ok(Reason::CapacityFilled {
        cutoff: outcome.cutoffs.get(course).cloned(),
        student_score: student_score(&spec.weights, &app.features)?,
    })
}

/// One reason per course the student ranked.
pub fn explain(
    student: &str,
    outcome: &MatchingOutcome,
    instance: &MatchingInstance,
) -> Result<Explanation, MatchingError> {
    let app = instance
        .student(student)
        .ok_or_else(|| MatchingError::UnknownStudent(student.to_string()))?;
    let courses = app
        .course_ranking
        .iter()
        .enumerate()
        .map(|(r, c)| {
            Ok(CourseReason {
                course: c.clone(),
                rank: Some(r + 1),
                reason: reason_for(student, c, outcome, instance)?,
            })
        })
        .collect::<Result<_, MatchingError>>()?;
    Ok(Explanation {
        student: student.to_string(),
        assigned: outcome.assignment.get(student).cloned().flatten(),
        pinned: instance.pins().contains_key(student),
        courses,
    })
}

/// Reason for one specific course, including courses the student did not rank.
pub fn explain_course(
    student: &str,
    course: &str,
    outcome: &MatchingOutcome,
    instance: &MatchingInstance,
) -> Result<CourseReason, MatchingError> {
    let reason = reason_for(student, course, outcome, instance)?;
    let rank = instance
        .student(student)
        .and_then(|s| s.course_ranking.iter().position(|c| c == course))
        .map(|r| r + 1);
    Ok(CourseReason {
        course: course.to_string(),
        rank,
        reason,
    })
}
