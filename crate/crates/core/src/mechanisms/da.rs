use std::collections::BinaryHeap;

use super::{ensure_valid, MechanismError};
use crate::model::{Allocation, Market, SchoolId, StudentId};

/// Student-proposing deferred acceptance.
///
/// Students propose down their lists one school at a time; each school keeps
/// its best `capacity` applicants by priority and rejects the rest. A school
/// that does not list an applicant rejects them outright. Students who run out
/// of schools stay unassigned. The result is the student-optimal stable
/// allocation and does not depend on proposal order.
pub fn deferred_acceptance(market: &Market) -> Result<Allocation, MechanismError> {
    ensure_valid(market)?;
    let priority = market.priority_index();
    let n = market.n_students();

    // held[s]: max-heap on priority position, so the worst held student pops first
    let mut held: Vec<BinaryHeap<(u32, StudentId)>> = vec![BinaryHeap::new(); market.n_schools()];
    let mut next = vec![0usize; n];
    let mut free: Vec<StudentId> = market.students().rev().collect();

    while let Some(t) = free.pop() {
        let list = market.prefs(t);
        while next[t.index()] < list.len() {
            let s = list[next[t.index()]];
            next[t.index()] += 1;
            let Some(pos) = priority.position(s, t) else {
                continue;
            };
            let heap = &mut held[s.index()];
            if (heap.len() as u32) < market.capacity(s) {
                heap.push((pos, t));
                break;
            }
            let &(worst, _) = heap.peek().expect("full school with positive capacity");
            if pos < worst {
                let (_, bumped) = heap.pop().unwrap();
                heap.push((pos, t));
                free.push(bumped);
                break;
            }
        }
    }

    let mut out = Allocation::unassigned(n);
    for (s, heap) in held.iter().enumerate() {
        for &(_, t) in heap.iter() {
            out.assign(t, Some(SchoolId(s as u32)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::model::Market;

    fn ranks(m: &Market, a: &Allocation) -> Vec<u32> {
        a.ranks(m).unwrap()
    }

    #[test]
    fn two_students_same_top_choice() {
        // s1 priority: student 2 over student 1
        let m = Market::one_to_one(
            vec![sc(&[0, 1]), sc(&[0, 1])],
            vec![st(&[1, 0]), st(&[0, 1])],
        )
        .unwrap();
        let a = deferred_acceptance(&m).unwrap();
        assert_eq!(a.as_slice(), &[Some(SchoolId(1)), Some(SchoolId(0))]);
        assert_eq!(ranks(&m, &a), vec![2, 1]);
    }

    #[test]
    fn disjoint_top_choices() {
        let m = diagonal(5);
        assert!(ranks(&m, &deferred_acceptance(&m).unwrap())
            .iter()
            .all(|&r| r == 1));
    }

    #[test]
    fn three_by_three_trace() {
        let m = three_by_three();
        let a = deferred_acceptance(&m).unwrap();
        assert_eq!(ranks(&m, &a), vec![2, 2, 3]);
    }

    #[test]
    fn unlisted_applicants_are_rejected() {
        // s1 only lists student 2; student 1 falls through to s2.
        let m = Market::one_to_one(vec![sc(&[0, 1]), sc(&[0])], vec![st(&[1]), st(&[0])]).unwrap();
        let a = deferred_acceptance(&m).unwrap();
        assert_eq!(a.as_slice(), &[Some(SchoolId(1)), Some(SchoolId(0))]);
    }

    #[test]
    fn exhausted_lists_end_unassigned() {
        let m = Market::new(
            vec![1],
            vec![sc(&[0]), sc(&[0]), sc(&[])],
            vec![st(&[0, 1])],
        )
        .unwrap();
        let a = deferred_acceptance(&m).unwrap();
        assert_eq!(a.as_slice(), &[Some(SchoolId(0)), None, None]);
        assert_eq!(ranks(&m, &a), vec![1, 2, 1]);
    }

    #[test]
    fn capacities_keep_best_applicants() {
        // one school with two seats, three applicants; priority 3 > 1 > 2
        let m = Market::new(
            vec![2, 1],
            vec![sc(&[0, 1]); 3],
            vec![st(&[2, 0, 1]), st(&[0, 1, 2])],
        )
        .unwrap();
        let a = deferred_acceptance(&m).unwrap();
        assert_eq!(
            a.as_slice(),
            &[Some(SchoolId(0)), Some(SchoolId(1)), Some(SchoolId(0))]
        );
        a.check(&m).unwrap();
    }
}
