use rand::seq::SliceRandom;

use matchlab::{Market, SchoolId, Seed, StudentId};

/// `n` students and `n` one-seat schools; every preference list and every
/// priority list is an independent uniform permutation (Fisher–Yates), drawn
/// students first, then schools, from one stream seeded by `seed`.
pub fn generate_uniform_market(n: usize, seed: Seed) -> Market {
    let mut rng = seed.rng();
    let prefs = (0..n)
        .map(|_| {
            let mut list: Vec<SchoolId> = (0..n as u32).map(SchoolId).collect();
            list.shuffle(&mut rng);
            list
        })
        .collect();
    let priorities = (0..n)
        .map(|_| {
            let mut list: Vec<StudentId> = (0..n as u32).map(StudentId).collect();
            list.shuffle(&mut rng);
            list
        })
        .collect();
    Market::one_to_one(prefs, priorities).expect("permutation lists form a valid market")
}
