use rand::seq::SliceRandom;

use super::{ensure_valid, MechanismError};
use crate::model::{Allocation, Market, StudentId};
use crate::seed::Seed;

/// Uniformly random picking order drawn from `seed` (Fisher–Yates).
pub fn dictator_order(n_students: usize, seed: Seed) -> Vec<StudentId> {
    let mut order: Vec<StudentId> = (0..n_students as u32).map(StudentId).collect();
    order.shuffle(&mut seed.rng());
    order
}

/// Random serial dictatorship: in [`dictator_order`], each student takes
/// their most preferred school that still has a free seat, or stays
/// unassigned if every school on their list is full. Priorities are ignored.
pub fn random_serial_dictatorship(
    market: &Market,
    seed: Seed,
) -> Result<Allocation, MechanismError> {
    ensure_valid(market)?;
    let mut seats = market.capacities().to_vec();
    let mut out = Allocation::unassigned(market.n_students());
    for t in dictator_order(market.n_students(), seed) {
        if let Some(&s) = market.prefs(t).iter().find(|s| seats[s.index()] > 0) {
            seats[s.index()] -= 1;
            out.assign(t, Some(s));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::model::SchoolId;

    #[test]
    fn single_student_gets_top_school() {
        let m = Market::one_to_one(vec![sc(&[0])], vec![st(&[0])]).unwrap();
        let a = random_serial_dictatorship(&m, Seed(9)).unwrap();
        assert_eq!(a.as_slice(), &[Some(SchoolId(0))]);
    }

    #[test]
    fn identical_lists_give_rank_equal_to_turn() {
        let n = 7u32;
        let list: Vec<u32> = (0..n).rev().collect();
        let m = Market::one_to_one(
            vec![sc(&list); n as usize],
            vec![st(&(0..n).collect::<Vec<_>>()); n as usize],
        )
        .unwrap();
        for seed in 0..20 {
            let a = random_serial_dictatorship(&m, Seed(seed)).unwrap();
            for (turn, t) in dictator_order(n as usize, Seed(seed))
                .into_iter()
                .enumerate()
            {
                assert_eq!(m.rank_of(t, a.school_of(t)).unwrap(), turn as u32 + 1);
            }
        }
    }

    #[test]
    fn exhausted_list_is_unassigned() {
        let m = Market::new(
            vec![1, 1],
            vec![sc(&[0]), sc(&[0]), sc(&[1])],
            vec![vec![], vec![]],
        )
        .unwrap();
        let a = random_serial_dictatorship(&m, Seed(3)).unwrap();
        assert_eq!(a.unassigned_count(), 1);
        assert_eq!(a.school_of(StudentId(2)), Some(SchoolId(1)));
    }

    #[test]
    fn order_is_a_seeded_permutation() {
        let a = dictator_order(50, Seed(1));
        assert_eq!(a, dictator_order(50, Seed(1)));
        assert_ne!(a, dictator_order(50, Seed(2)));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).map(StudentId).collect::<Vec<_>>());
    }
}
