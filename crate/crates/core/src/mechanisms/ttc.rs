use super::{ensure_valid, MechanismError};
use crate::model::{Allocation, Market, PriorityIndex, SchoolId, StudentId};

/// Top trading cycles with per-school capacity counters.
///
/// Each round every remaining student points to their most preferred
/// remaining school that lists them, and every remaining school points to its
/// highest-priority remaining student. Students on a cycle receive the school
/// they point to; a school leaves once its seats are used up or nobody it
/// lists remains. Students with no acceptable school left stay unassigned.
pub fn top_trading_cycles(market: &Market) -> Result<Allocation, MechanismError> {
    ensure_valid(market)?;
    let mut state = TtcState::new(market);
    while state.settle_pointers() {
        state.clear_cycles();
    }
    Ok(state.allocation)
}

struct TtcState<'a> {
    market: &'a Market,
    priority: PriorityIndex,
    seats: Vec<u32>,
    student_active: Vec<bool>,
    school_active: Vec<bool>,
    // cursors into each preference / priority list
    student_ptr: Vec<usize>,
    school_ptr: Vec<usize>,
    allocation: Allocation,
    // scratch for cycle search
    mark: Vec<u32>,
    epoch: u32,
}

impl<'a> TtcState<'a> {
    fn new(market: &'a Market) -> Self {
        let seats = market.capacities().to_vec();
        TtcState {
            market,
            priority: market.priority_index(),
            school_active: seats.iter().map(|&c| c > 0).collect(),
            seats,
            student_active: vec![true; market.n_students()],
            student_ptr: vec![0; market.n_students()],
            school_ptr: vec![0; market.n_schools()],
            allocation: Allocation::unassigned(market.n_students()),
            mark: vec![0; market.n_students()],
            epoch: 0,
        }
    }

    fn target_school(&self, t: StudentId) -> SchoolId {
        self.market.prefs(t)[self.student_ptr[t.index()]]
    }

    fn target_student(&self, s: SchoolId) -> StudentId {
        self.market.priorities(s)[self.school_ptr[s.index()]]
    }

    /// Advances every pointer past departed agents until all remaining agents
    /// point at remaining agents. Returns whether any student remains.
    fn settle_pointers(&mut self) -> bool {
        let market = self.market;
        loop {
            let mut changed = false;
            for t in market.students() {
                if !self.student_active[t.index()] {
                    continue;
                }
                let list = market.prefs(t);
                let ptr = &mut self.student_ptr[t.index()];
                while *ptr < list.len() {
                    let s = list[*ptr];
                    if self.school_active[s.index()] && self.priority.accepts(s, t) {
                        break;
                    }
                    *ptr += 1;
                }
                if *ptr == list.len() {
                    self.student_active[t.index()] = false;
                    changed = true;
                }
            }
            for s in market.schools() {
                if !self.school_active[s.index()] {
                    continue;
                }
                let list = market.priorities(s);
                let ptr = &mut self.school_ptr[s.index()];
                while *ptr < list.len() && !self.student_active[list[*ptr].index()] {
                    *ptr += 1;
                }
                if *ptr == list.len() {
                    self.school_active[s.index()] = false;
                    changed = true;
                }
            }
            if !changed {
                return self.student_active.iter().any(|&a| a);
            }
        }
    }

    /// Finds every cycle of the student -> school -> student pointer graph
    /// and executes the trades on it.
    fn clear_cycles(&mut self) {
        // Walks follow t -> target_student(target_school(t)). Every remaining
        // node has exactly one successor, so each walk ends on a cycle.
        self.epoch += 1;
        let walk_epoch_base = self.epoch;
        let mut cycles: Vec<StudentId> = Vec::new();
        let mut cycle_starts = Vec::new();
        for start in self.market.students() {
            if !self.student_active[start.index()] || self.mark[start.index()] >= walk_epoch_base {
                continue;
            }
            self.epoch += 1;
            let here = self.epoch;
            let mut t = start;
            while self.mark[t.index()] < walk_epoch_base {
                self.mark[t.index()] = here;
                t = self.target_student(self.target_school(t));
            }
            if self.mark[t.index()] == here {
                // closed a new cycle at t
                cycle_starts.push(cycles.len());
                let first = t;
                loop {
                    cycles.push(t);
                    t = self.target_student(self.target_school(t));
                    if t == first {
                        break;
                    }
                }
            }
        }
        for &t in &cycles {
            let s = self.target_school(t);
            self.allocation.assign(t, Some(s));
            self.seats[s.index()] -= 1;
            if self.seats[s.index()] == 0 {
                self.school_active[s.index()] = false;
            }
        }
        for &t in &cycles {
            self.student_active[t.index()] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn disjoint_top_choices_clear_in_one_round() {
        let m = diagonal(6);
        let a = top_trading_cycles(&m).unwrap();
        assert!(a.ranks(&m).unwrap().iter().all(|&r| r == 1));
    }

    #[test]
    fn three_by_three_trace() {
        let m = three_by_three();
        let a = top_trading_cycles(&m).unwrap();
        assert_eq!(
            a.as_slice(),
            &[Some(SchoolId(1)), Some(SchoolId(0)), Some(SchoolId(2))]
        );
        assert_eq!(a.ranks(&m).unwrap(), vec![1, 1, 3]);
    }

    #[test]
    fn single_student() {
        let m = Market::one_to_one(vec![sc(&[0])], vec![st(&[0])]).unwrap();
        assert_eq!(
            top_trading_cycles(&m).unwrap().as_slice(),
            &[Some(SchoolId(0))]
        );
    }

    #[test]
    fn capacity_counter_keeps_school_open() {
        // s1 has two seats; all three students want it, priority 1 > 2 > 3.
        let m = Market::new(
            vec![2, 1],
            vec![sc(&[0, 1]); 3],
            vec![st(&[0, 1, 2]), st(&[2, 1, 0])],
        )
        .unwrap();
        let a = top_trading_cycles(&m).unwrap();
        a.check(&m).unwrap();
        assert_eq!(
            a.as_slice(),
            &[Some(SchoolId(0)), Some(SchoolId(0)), Some(SchoolId(1))]
        );
    }

    #[test]
    fn partial_lists_leave_students_unassigned() {
        // Student 2 only ranks s1 which does not list them.
        let m = Market::one_to_one(vec![sc(&[0]), sc(&[0, 1])], vec![st(&[0]), st(&[1])]).unwrap();
        let a = top_trading_cycles(&m).unwrap();
        assert_eq!(a.as_slice(), &[Some(SchoolId(0)), Some(SchoolId(1))]);

        let m = Market::one_to_one(vec![sc(&[0]), sc(&[0])], vec![st(&[0, 1])]).unwrap();
        assert_eq!(
            top_trading_cycles(&m).unwrap().as_slice(),
            &[Some(SchoolId(0)), None]
        );
    }
}
