#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use matchlab::{Allocation, Market, SchoolId, StudentId};

pub fn uniform_market(n: usize, rng: &mut ChaCha8Rng) -> Market {
    let prefs = (0..n)
        .map(|_| {
            let mut v: Vec<SchoolId> = (0..n as u32).map(SchoolId).collect();
            v.shuffle(rng);
            v
        })
        .collect();
    let pri = (0..n)
        .map(|_| {
            let mut v: Vec<StudentId> = (0..n as u32).map(StudentId).collect();
            v.shuffle(rng);
            v
        })
        .collect();
    Market::one_to_one(prefs, pri).unwrap()
}

/// Partial lists, uneven capacities, schools that list only some students.
pub fn ragged_market(n_students: usize, n_schools: usize, rng: &mut ChaCha8Rng) -> Market {
    let prefs = (0..n_students)
        .map(|_| {
            let mut v: Vec<SchoolId> = (0..n_schools as u32).map(SchoolId).collect();
            v.shuffle(rng);
            v.truncate(rng.gen_range(0..=n_schools));
            v
        })
        .collect();
    let pri = (0..n_schools)
        .map(|_| {
            let mut v: Vec<StudentId> = (0..n_students as u32).map(StudentId).collect();
            v.shuffle(rng);
            v.truncate(rng.gen_range(n_students / 2..=n_students));
            v
        })
        .collect();
    let caps = (0..n_schools).map(|_| rng.gen_range(1..=3)).collect();
    Market::new(caps, prefs, pri).unwrap()
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k - 1 {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
        heap(k - 1, a, out);
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

pub fn perfect_matching(perm: &[usize]) -> Allocation {
    Allocation::new(perm.iter().map(|&s| Some(SchoolId(s as u32))).collect())
}

fn pos<T: PartialEq>(list: &[T], x: T) -> usize {
    list.iter().position(|y| *y == x).unwrap()
}

/// Full-list one-to-one stability, checked pair by pair.
pub fn is_stable_one_to_one(m: &Market, a: &Allocation) -> bool {
    let holder: Vec<StudentId> = {
        let mut h = vec![StudentId(0); m.n_schools()];
        for (t, s) in a.iter() {
            h[s.unwrap().index()] = t;
        }
        h
    };
    for t in m.students() {
        let own = pos(m.prefs(t), a.school_of(t).unwrap());
        for s in m.schools() {
            let p = m.priorities(s);
            if pos(m.prefs(t), s) < own && pos(p, t) < pos(p, holder[s.index()]) {
                return false;
            }
        }
    }
    true
}

pub fn rank_vector(m: &Market, a: &Allocation) -> Vec<u32> {
    a.ranks(m).unwrap()
}

/// Some perfect matching gives everyone a weakly better rank and someone a
/// strictly better one.
pub fn dominated_by_enumeration(m: &Market, a: &Allocation) -> bool {
    let base = rank_vector(m, a);
    permutations(m.n_students()).iter().any(|p| {
        let r = rank_vector(m, &perfect_matching(p));
        r.iter().zip(&base).all(|(x, y)| x <= y) && r.iter().zip(&base).any(|(x, y)| x < y)
    })
}
