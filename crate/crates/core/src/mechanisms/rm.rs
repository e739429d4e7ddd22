use rand::seq::SliceRandom;

use super::{ensure_valid, MechanismError};
use crate::assignment::{min_cost_assignment, CostMatrix};
use crate::model::{Allocation, Market, SchoolId};
use crate::seed::Seed;

/// Rank-cost formulation of a market: one row per student, one column per
/// seat, plus a private "unassigned" column for students who may end up
/// without a seat.
#[derive(Clone, Debug)]
pub struct RankProblem {
    pub cost: CostMatrix<i64>,
    /// School behind each column; `None` for an unassigned column.
    pub column_school: Vec<Option<SchoolId>>,
}

/// Builds the cost matrix: a seat at the school a student ranks `r`-th costs
/// `r`, schools the student does not rank are forbidden, and the unassigned
/// column costs `k + 1` for a list of length `k`.
///
/// Unassigned columns are only added when some student can end up without a
/// seat: the student's list is partial, or the market has fewer seats than
/// students.
pub fn rank_cost_matrix(market: &Market) -> RankProblem {
    let n = market.n_students();
    let undersupplied = market.total_capacity() < n as u64;

    let mut column_school = Vec::new();
    let mut first_seat = Vec::with_capacity(market.n_schools());
    for s in market.schools() {
        first_seat.push(column_school.len());
        column_school.extend(std::iter::repeat_n(Some(s), market.capacity(s) as usize));
    }
    let mut dummy = vec![None; n];
    for t in market.students() {
        if undersupplied || market.prefs(t).len() < market.n_schools() {
            dummy[t.index()] = Some(column_school.len());
            column_school.push(None);
        }
    }

    let mut cost = CostMatrix::forbidden(n, column_school.len());
    for t in market.students() {
        let list = market.prefs(t);
        for (pos, &s) in list.iter().enumerate() {
            let start = first_seat[s.index()];
            for col in start..start + market.capacity(s) as usize {
                cost.set(t.index(), col, Some(pos as i64 + 1));
            }
        }
        if let Some(col) = dummy[t.index()] {
            cost.set(t.index(), col, Some(list.len() as i64 + 1));
        }
    }
    RankProblem {
        cost,
        column_school,
    }
}

/// Rank-minimizing mechanism: an allocation minimizing the sum of effective
/// ranks. Ties between optimal allocations are broken by shuffling student and
/// seat order with `seed` before solving. School priorities are never read.
pub fn rank_minimizing(market: &Market, seed: Seed) -> Result<Allocation, MechanismError> {
    ensure_valid(market)?;
    let problem = rank_cost_matrix(market);
    let (rows, cols) = (problem.cost.rows(), problem.cost.cols());

    let mut rng = seed.rng();
    let mut row_perm: Vec<usize> = (0..rows).collect();
    let mut col_perm: Vec<usize> = (0..cols).collect();
    row_perm.shuffle(&mut rng);
    col_perm.shuffle(&mut rng);

    let mut shuffled = CostMatrix::forbidden(rows, cols);
    for (r, &orig_r) in row_perm.iter().enumerate() {
        let src = problem.cost.row(orig_r);
        for (c, &orig_c) in col_perm.iter().enumerate() {
            shuffled.set(r, c, src[orig_c]);
        }
    }
    let solved = min_cost_assignment(&shuffled)?;

    let mut out = Allocation::unassigned(rows);
    for (r, &c) in solved.row_to_col.iter().enumerate() {
        let student = crate::model::StudentId(row_perm[r] as u32);
        out.assign(student, problem.column_school[col_perm[c]]);
    }
    Ok(out)
}
