//! Markets, allocations and the rank convention shared by every mechanism.
//!
//! Students and schools are addressed by dense indices ([`StudentId`],
//! [`SchoolId`]). Each market also carries the external labels it was built
//! or loaded with, which is what error messages and files show.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StudentId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchoolId(pub u32);

impl StudentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl SchoolId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A single invariant violation found in a market, reported with external labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownSchool { student: u32, school: u32 },
    UnknownStudent { school: u32, student: u32 },
    DuplicatePreference { student: u32, school: u32 },
    DuplicatePriority { school: u32, student: u32 },
    ZeroCapacity { school: u32 },
    DuplicateStudentId { student: u32 },
    DuplicateSchoolId { school: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSchool { student, school } => {
                write!(
                    f,
                    "unknown school id {school} in preference list of student {student}"
                )
            }
            Violation::UnknownStudent { school, student } => {
                write!(
                    f,
                    "unknown student id {student} in priority list of school {school}"
                )
            }
            Violation::DuplicatePreference { student, school } => {
                write!(
                    f,
                    "duplicate in preference list of student {student} (school {school})"
                )
            }
            Violation::DuplicatePriority { school, student } => {
                write!(
                    f,
                    "duplicate in priority list of school {school} (student {student})"
                )
            }
            Violation::ZeroCapacity { school } => write!(f, "zero capacity at school {school}"),
            Violation::DuplicateStudentId { student } => {
                write!(f, "duplicate student id {student}")
            }
            Violation::DuplicateSchoolId { school } => write!(f, "duplicate school id {school}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unranked school: student {student} does not rank school {school}")]
    UnrankedSchool { student: u32, school: u32 },
    #[error("undersupplied market: {capacity} seats for {students} students")]
    Undersupplied { capacity: u64, students: usize },
    #[error("invalid market: {}", join_violations(.0))]
    InvalidMarket(Vec<Violation>),
    #[error("allocation covers {found} students, market has {expected}")]
    AllocationSize { expected: usize, found: usize },
    #[error("allocation places student {student} at nonexistent school index {school}")]
    AllocationUnknownSchool { student: u32, school: u32 },
    #[error("school {school} holds {held} students but has capacity {capacity}")]
    OverCapacity {
        school: u32,
        held: u32,
        capacity: u32,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// School-choice market: students with strict (possibly partial) preference
/// lists, schools with capacities and strict (possibly partial) priority lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Market {
    student_labels: Vec<u32>,
    school_labels: Vec<u32>,
    capacities: Vec<u32>,
    prefs: Vec<Vec<SchoolId>>,
    priorities: Vec<Vec<StudentId>>,
}

impl Market {
    /// Builds and validates a market with labels `1..=n`.
    pub fn new(
        capacities: Vec<u32>,
        prefs: Vec<Vec<SchoolId>>,
        priorities: Vec<Vec<StudentId>>,
    ) -> Result<Self, ModelError> {
        let student_labels = (1..=prefs.len() as u32).collect();
        let school_labels = (1..=capacities.len() as u32).collect();
        let market = Self::from_parts(student_labels, school_labels, capacities, prefs, priorities);
        let violations = market.validate();
        if violations.is_empty() {
            Ok(market)
        } else {
            Err(ModelError::InvalidMarket(violations))
        }
    }

    /// One seat per school.
    pub fn one_to_one(
        prefs: Vec<Vec<SchoolId>>,
        priorities: Vec<Vec<StudentId>>,
    ) -> Result<Self, ModelError> {
        let caps = vec![1; priorities.len()];
        Self::new(caps, prefs, priorities)
    }

    /// Assembles a market without validating it. Use [`Market::validate`]
    /// before handing the result to a mechanism.
    ///
    /// Panics if the label and list vectors disagree in length.
    pub fn from_parts(
        student_labels: Vec<u32>,
        school_labels: Vec<u32>,
        capacities: Vec<u32>,
        prefs: Vec<Vec<SchoolId>>,
        priorities: Vec<Vec<StudentId>>,
    ) -> Self {
        assert_eq!(
            student_labels.len(),
            prefs.len(),
            "one preference list per student"
        );
        assert_eq!(
            school_labels.len(),
            capacities.len(),
            "one capacity per school"
        );
        assert_eq!(
            school_labels.len(),
            priorities.len(),
            "one priority list per school"
        );
        Market {
            student_labels,
            school_labels,
            capacities,
            prefs,
            priorities,
        }
    }

    pub fn n_students(&self) -> usize {
        self.prefs.len()
    }

    pub fn n_schools(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacity(&self, school: SchoolId) -> u32 {
        self.capacities[school.index()]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().map(|&c| c as u64).sum()
    }

    pub fn prefs(&self, student: StudentId) -> &[SchoolId] {
        &self.prefs[student.index()]
    }

    pub fn all_prefs(&self) -> &[Vec<SchoolId>] {
        &self.prefs
    }

    pub fn priorities(&self, school: SchoolId) -> &[StudentId] {
        &self.priorities[school.index()]
    }

    pub fn all_priorities(&self) -> &[Vec<StudentId>] {
        &self.priorities
    }

    pub fn student_labels(&self) -> &[u32] {
        &self.student_labels
    }

    pub fn school_labels(&self) -> &[u32] {
        &self.school_labels
    }

    pub fn student_label(&self, student: StudentId) -> u32 {
        self.student_labels
            .get(student.index())
            .copied()
            .unwrap_or(student.0 + 1)
    }

    pub fn school_label(&self, school: SchoolId) -> u32 {
        self.school_labels
            .get(school.index())
            .copied()
            .unwrap_or(school.0 + 1)
    }

    pub fn students(&self) -> impl DoubleEndedIterator<Item = StudentId> + ExactSizeIterator + '_ {
        (0..self.n_students() as u32).map(StudentId)
    }

    pub fn schools(&self) -> impl DoubleEndedIterator<Item = SchoolId> + ExactSizeIterator + '_ {
        (0..self.n_schools() as u32).map(SchoolId)
    }

    /// Total capacity equals the number of students.
    pub fn is_balanced(&self) -> bool {
        self.total_capacity() == self.n_students() as u64
    }

    /// Every student ranks every school.
    pub fn has_full_lists(&self) -> bool {
        self.prefs.iter().all(|p| p.len() == self.n_schools())
    }

    /// Rank of a placement for `student`: 1-based position in their list, and
    /// `k + 1` for a student ranking `k` schools who is unassigned.
    pub fn rank_of(
        &self,
        student: StudentId,
        placement: Option<SchoolId>,
    ) -> Result<u32, ModelError> {
        let list = self.prefs(student);
        match placement {
            None => Ok(list.len() as u32 + 1),
            Some(school) => list
                .iter()
                .position(|&s| s == school)
                .map(|p| p as u32 + 1)
                .ok_or(ModelError::UnrankedSchool {
                    student: self.student_label(student),
                    school: self.school_label(school),
                }),
        }
    }

    /// Every invariant violation, in a stable order. Empty iff the market is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n_students = self.n_students() as u32;
        let n_schools = self.n_schools() as u32;
        let mut out = Vec::new();

        let mut seen = BTreeSet::new();
        for &label in &self.student_labels {
            if !seen.insert(label) {
                out.push(Violation::DuplicateStudentId { student: label });
            }
        }
        seen.clear();
        for &label in &self.school_labels {
            if !seen.insert(label) {
                out.push(Violation::DuplicateSchoolId { school: label });
            }
        }

        for s in self.schools() {
            if self.capacity(s) == 0 {
                out.push(Violation::ZeroCapacity {
                    school: self.school_label(s),
                });
            }
        }

        let mut seen = vec![false; self.n_schools()];
        for t in self.students() {
            seen.iter_mut().for_each(|x| *x = false);
            for &s in self.prefs(t) {
                if s.0 >= n_schools {
                    out.push(Violation::UnknownSchool {
                        student: self.student_label(t),
                        school: self.school_label(s),
                    });
                } else if std::mem::replace(&mut seen[s.index()], true) {
                    out.push(Violation::DuplicatePreference {
                        student: self.student_label(t),
                        school: self.school_label(s),
                    });
                }
            }
        }

        let mut seen = vec![false; self.n_students()];
        for s in self.schools() {
            seen.iter_mut().for_each(|x| *x = false);
            for &t in self.priorities(s) {
                if t.0 >= n_students {
                    out.push(Violation::UnknownStudent {
                        school: self.school_label(s),
                        student: self.student_label(t),
                    });
                } else if std::mem::replace(&mut seen[t.index()], true) {
                    out.push(Violation::DuplicatePriority {
                        school: self.school_label(s),
                        student: self.student_label(t),
                    });
                }
            }
        }
        out
    }

    /// Dense lookup table of priority positions.
    pub fn priority_index(&self) -> PriorityIndex {
        let n = self.n_students();
        let mut ranks = vec![PriorityIndex::UNLISTED; self.n_schools() * n];
        for (s, list) in self.priorities.iter().enumerate() {
            for (pos, t) in list.iter().enumerate() {
                ranks[s * n + t.index()] = pos as u32;
            }
        }
        PriorityIndex {
            n_students: n,
            ranks,
        }
    }

    /// Removes surplus seats one at a time from the school with the largest
    /// remaining capacity (lowest index on ties) until capacity equals demand.
    ///
    /// A capacity only drops to zero when there are more schools than students.
    pub fn balance_capacities(&self) -> Result<Market, ModelError> {
        let demand = self.n_students() as u64;
        let supply = self.total_capacity();
        if supply < demand {
            return Err(ModelError::Undersupplied {
                capacity: supply,
                students: self.n_students(),
            });
        }
        let mut capacities = self.capacities.clone();
        let mut heap: BinaryHeap<(u32, Reverse<usize>)> = capacities
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (c, Reverse(s)))
            .collect();
        let mut surplus = supply - demand;
        while surplus > 0 {
            let (c, Reverse(s)) = heap.pop().expect("surplus implies a positive capacity");
            capacities[s] = c - 1;
            if c > 1 {
                heap.push((c - 1, Reverse(s)));
            }
            surplus -= 1;
        }
        Ok(Market {
            capacities,
            ..self.clone()
        })
    }

    /// Same market with one student's list replaced.
    pub fn with_preferences(&self, student: StudentId, list: Vec<SchoolId>) -> Market {
        let mut out = self.clone();
        out.prefs[student.index()] = list;
        out
    }
}

/// Free-function form of [`Market::validate`].
pub fn validate_market(market: &Market) -> Vec<Violation> {
    market.validate()
}

/// Position of each student in each school's priority list (0 = highest).
#[derive(Clone, Debug)]
pub struct PriorityIndex {
    n_students: usize,
    ranks: Vec<u32>,
}

impl PriorityIndex {
    const UNLISTED: u32 = u32::MAX;

    /// `None` when the school does not list the student.
    #[inline]
    pub fn position(&self, school: SchoolId, student: StudentId) -> Option<u32> {
        let r = self.ranks[school.index() * self.n_students + student.index()];
        (r != Self::UNLISTED).then_some(r)
    }

    /// Position with unlisted students ordered after every listed one.
    #[inline]
    pub fn position_or_last(&self, school: SchoolId, student: StudentId) -> u32 {
        self.ranks[school.index() * self.n_students + student.index()]
    }

    #[inline]
    pub fn accepts(&self, school: SchoolId, student: StudentId) -> bool {
        self.position(school, student).is_some()
    }
}

/// Student-to-school matching; `None` means unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    assignment: Vec<Option<SchoolId>>,
}

impl Allocation {
    pub fn new(assignment: Vec<Option<SchoolId>>) -> Self {
        Allocation { assignment }
    }

    pub fn unassigned(n_students: usize) -> Self {
        Allocation {
            assignment: vec![None; n_students],
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn school_of(&self, student: StudentId) -> Option<SchoolId> {
        self.assignment[student.index()]
    }

    pub fn assign(&mut self, student: StudentId, school: Option<SchoolId>) {
        self.assignment[student.index()] = school;
    }

    pub fn as_slice(&self) -> &[Option<SchoolId>] {
        &self.assignment
    }

    pub fn iter(&self) -> impl Iterator<Item = (StudentId, Option<SchoolId>)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .map(|(t, &s)| (StudentId(t as u32), s))
    }

    pub fn unassigned_count(&self) -> usize {
        self.assignment.iter().filter(|s| s.is_none()).count()
    }

    /// Students held by each school, in student order.
    pub fn holders(&self, n_schools: usize) -> Vec<Vec<StudentId>> {
        let mut out = vec![Vec::new(); n_schools];
        for (t, s) in self.iter() {
            if let Some(s) = s {
                out[s.index()].push(t);
            }
        }
        out
    }

    /// Checks size, school ids and capacities against `market`.
    pub fn check(&self, market: &Market) -> Result<(), ModelError> {
        if self.len() != market.n_students() {
            return Err(ModelError::AllocationSize {
                expected: market.n_students(),
                found: self.len(),
            });
        }
        let mut load = vec![0u32; market.n_schools()];
        for (t, s) in self.iter() {
            if let Some(s) = s {
                if s.index() >= market.n_schools() {
                    return Err(ModelError::AllocationUnknownSchool {
                        student: market.student_label(t),
                        school: s.0,
                    });
                }
                load[s.index()] += 1;
            }
        }
        for s in market.schools() {
            if load[s.index()] > market.capacity(s) {
                return Err(ModelError::OverCapacity {
                    school: market.school_label(s),
                    held: load[s.index()],
                    capacity: market.capacity(s),
                });
            }
        }
        Ok(())
    }

    /// Effective rank of every student under the `k + 1` convention.
    pub fn ranks(&self, market: &Market) -> Result<Vec<u32>, ModelError> {
        self.iter().map(|(t, s)| market.rank_of(t, s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(ids: &[u32]) -> Vec<SchoolId> {
        ids.iter().map(|&i| SchoolId(i)).collect()
    }

    fn st(ids: &[u32]) -> Vec<StudentId> {
        ids.iter().map(|&i| StudentId(i)).collect()
    }

    fn two_by_two() -> Market {
        Market::one_to_one(
            vec![sc(&[0, 1]), sc(&[1, 0])],
            vec![st(&[0, 1]), st(&[1, 0])],
        )
        .unwrap()
    }

    #[test]
    fn rank_is_position_in_list() {
        // labels s1..s5 map to indices 0..4
        let m = Market::from_parts(
            vec![1],
            vec![1, 2, 3, 4, 5],
            vec![1; 5],
            vec![sc(&[2, 0, 1])],
            vec![vec![]; 5],
        );
        let t = StudentId(0);
        assert_eq!(m.rank_of(t, Some(SchoolId(0))), Ok(2));
        assert_eq!(m.rank_of(t, None), Ok(4));
        assert_eq!(
            m.rank_of(t, Some(SchoolId(4))),
            Err(ModelError::UnrankedSchool {
                student: 1,
                school: 5
            })
        );

        let single = Market::from_parts(
            vec![1],
            vec![1, 2, 3, 4, 5],
            vec![1; 5],
            vec![sc(&[4])],
            vec![vec![]; 5],
        );
        assert_eq!(single.rank_of(t, Some(SchoolId(4))), Ok(1));
    }

    #[test]
    fn well_formed_market_has_no_violations() {
        assert!(two_by_two().validate().is_empty());
    }

    #[test]
    fn duplicate_preference_is_reported() {
        let m = Market::from_parts(
            vec![1, 2],
            vec![1, 2],
            vec![1, 1],
            vec![sc(&[0, 0]), sc(&[1, 0])],
            vec![st(&[0, 1]), st(&[1, 0])],
        );
        let v = m.validate();
        assert_eq!(
            v,
            vec![Violation::DuplicatePreference {
                student: 1,
                school: 1
            }]
        );
        assert!(v[0]
            .to_string()
            .starts_with("duplicate in preference list of student 1"));
    }

    #[test]
    fn unknown_student_in_priorities() {
        let m = Market::from_parts(
            vec![1, 2],
            vec![1, 2],
            vec![1, 1],
            vec![sc(&[0, 1]), sc(&[1, 0])],
            vec![st(&[0, 8]), st(&[1, 0])],
        );
        let v = m.validate();
        assert_eq!(
            v,
            vec![Violation::UnknownStudent {
                school: 1,
                student: 9
            }]
        );
        assert!(v[0].to_string().contains("unknown student id"));
    }

    #[test]
    fn zero_capacity_is_a_violation() {
        let m = Market::from_parts(vec![1], vec![1], vec![0], vec![sc(&[0])], vec![st(&[0])]);
        assert_eq!(m.validate(), vec![Violation::ZeroCapacity { school: 1 }]);
        assert!(matches!(
            Market::new(vec![0], vec![sc(&[0])], vec![st(&[0])]),
            Err(ModelError::InvalidMarket(_))
        ));
    }

    fn with_caps(caps: Vec<u32>, n: usize) -> Market {
        let schools: Vec<SchoolId> = (0..caps.len() as u32).map(SchoolId).collect();
        let students: Vec<StudentId> = (0..n as u32).map(StudentId).collect();
        let k = caps.len();
        Market::new(caps, vec![schools; n], vec![students; k]).unwrap()
    }

    #[test]
    fn balancing_removes_from_largest_first() {
        let m = with_caps(vec![3, 3], 4);
        let b = m.balance_capacities().unwrap();
        assert_eq!(b.capacities(), &[2, 2]);
        assert_eq!(b.all_prefs(), m.all_prefs());

        let m = with_caps(vec![1, 1], 2);
        assert_eq!(m.balance_capacities().unwrap(), m);

        let m = with_caps(vec![1], 2);
        assert_eq!(
            m.balance_capacities(),
            Err(ModelError::Undersupplied {
                capacity: 1,
                students: 2
            })
        );
    }

    #[test]
    fn balancing_uneven_capacities() {
        // surplus 4: s0 5->4, s0 4->3 (tie, lower index), s2 4->3, s0 3->2
        let m = with_caps(vec![5, 1, 4], 6);
        let b = m.balance_capacities().unwrap();
        assert_eq!(b.capacities(), &[2, 1, 3]);
        assert!(b.is_balanced());
    }

    #[test]
    fn balancing_only_zeroes_when_schools_outnumber_students() {
        let m = with_caps(vec![1, 1, 1], 2);
        assert_eq!(m.balance_capacities().unwrap().capacities(), &[0, 1, 1]);
    }

    #[test]
    fn allocation_capacity_check() {
        let m = two_by_two();
        let ok = Allocation::new(vec![Some(SchoolId(0)), Some(SchoolId(1))]);
        assert!(ok.check(&m).is_ok());
        let bad = Allocation::new(vec![Some(SchoolId(0)), Some(SchoolId(0))]);
        assert!(matches!(
            bad.check(&m),
            Err(ModelError::OverCapacity {
                school: 1,
                held: 2,
                capacity: 1
            })
        ));
        assert!(matches!(
            Allocation::unassigned(3).check(&m),
            Err(ModelError::AllocationSize {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn priority_index_marks_unlisted() {
        let m = Market::new(
            vec![1, 1],
            vec![sc(&[0, 1]), sc(&[0])],
            vec![st(&[1]), st(&[0, 1])],
        )
        .unwrap();
        let idx = m.priority_index();
        assert_eq!(idx.position(SchoolId(0), StudentId(1)), Some(0));
        assert_eq!(idx.position(SchoolId(0), StudentId(0)), None);
        assert!(idx.accepts(SchoolId(1), StudentId(0)));
        assert!(!m.has_full_lists());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn market_strategy() -> impl Strategy<Value = Market> {
            (1usize..6, 1usize..5).prop_flat_map(|(n, k)| {
                let caps = proptest::collection::vec(1u32..5, k);
                let prefs = proptest::collection::vec(
                    Just((0..k as u32).collect::<Vec<_>>()).prop_shuffle(),
                    n,
                );
                (caps, prefs).prop_map(move |(caps, prefs)| {
                    let prefs = prefs
                        .into_iter()
                        .map(|p| p.into_iter().map(SchoolId).collect())
                        .collect();
                    let pri = vec![(0..n as u32).map(StudentId).collect(); k];
                    Market::new(caps, prefs, pri).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn rank_of_is_bijective(m in market_strategy()) {
                for t in m.students() {
                    let ranks: Vec<u32> = m.prefs(t).iter().map(|&s| m.rank_of(t, Some(s)).unwrap()).collect();
                    let expected: Vec<u32> = (1..=m.prefs(t).len() as u32).collect();
                    prop_assert_eq!(ranks, expected);
                }
            }

            #[test]
            fn balancing_is_idempotent(m in market_strategy()) {
                if let Ok(b) = m.balance_capacities() {
                    prop_assert!(b.is_balanced());
                    prop_assert_eq!(b.all_prefs(), m.all_prefs());
                    prop_assert_eq!(b.balance_capacities().unwrap(), b.clone());
                }
            }
        }
    }
}
