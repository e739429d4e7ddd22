//! Exact minimum-cost assignment.
//!
//! [`min_cost_assignment`] is the shortest-augmenting-path method with row and
//! column potentials: rows are inserted one at a time, and each insertion runs
//! a Dijkstra search over reduced costs to the nearest free column. It is
//! `O(rows² · cols)` and exact for any ordered cost scalar, integer, float or
//! rational.
//!
//! Forbidden pairs are `None` entries rather than a large sentinel, so no
//! arithmetic ever touches them and overflow cannot arise from them.

use std::fmt;
use std::ops::{Add, Sub};

use num_traits::Zero;
use thiserror::Error;

/// Scalar usable as an assignment cost.
pub trait Cost:
    Copy + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> + fmt::Debug
{
}

impl<T> Cost for T where T: Copy + PartialOrd + Zero + Add<Output = T> + Sub<Output = T> + fmt::Debug
{}

/// Largest row count accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_MAX_ROWS: usize = 8;
/// Largest column count accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_MAX_COLS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("cost matrix has {rows} rows but only {cols} columns")]
    TooManyRows { rows: usize, cols: usize },
    #[error("infeasible row {row}: no complete assignment covers it with finite costs")]
    InfeasibleRow { row: usize },
    #[error("ragged cost matrix: row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("brute force limited to {max_rows}x{max_cols}, got {rows}x{cols}")]
    TooLargeForBruteForce {
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },
}

/// Dense row-major cost matrix; `None` marks a forbidden pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<C> {
    rows: usize,
    cols: usize,
    entries: Vec<Option<C>>,
}

impl<C: Cost> CostMatrix<C> {
    /// All pairs forbidden.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        CostMatrix {
            rows,
            cols,
            entries: vec![None; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Result<Self, AssignmentError> {
        Self::from_options(
            rows.into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
        )
    }

    pub fn from_options(rows: Vec<Vec<Option<C>>>) -> Result<Self, AssignmentError> {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(AssignmentError::Ragged {
                    row,
                    expected: cols,
                    found: r.len(),
                });
            }
            entries.extend(r);
        }
        Ok(CostMatrix {
            rows: n,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<C> {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, cost: Option<C>) {
        self.entries[row * self.cols + col] = cost;
    }

    pub fn row(&self, row: usize) -> &[Option<C>] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum of the entries selected by `row_to_col`, `None` if any is forbidden.
    pub fn cost_of(&self, row_to_col: &[usize]) -> Option<C> {
        row_to_col
            .iter()
            .enumerate()
            .try_fold(C::zero(), |acc, (r, &c)| self.get(r, c).map(|x| acc + x))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentResult<C> {
    /// Column matched to each row.
    pub row_to_col: Vec<usize>,
    pub total_cost: C,
}

impl<C> AssignmentResult<C> {
    pub fn col_to_row(&self, cols: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; cols];
        for (r, &c) in self.row_to_col.iter().enumerate() {
            out[c] = Some(r);
        }
        out
    }
}

const FREE: usize = usize::MAX;

/// Minimum-cost matching of every row to a distinct column.
///
/// Ties are broken toward the lowest column index, so the result is a pure
/// function of the matrix.
pub fn min_cost_assignment<C: Cost>(
    cost: &CostMatrix<C>,
) -> Result<AssignmentResult<C>, AssignmentError> {
    let (n, m) = (cost.rows, cost.cols);
    if n > m {
        return Err(AssignmentError::TooManyRows { rows: n, cols: m });
    }
    if let Some(row) = (0..n).find(|&r| cost.row(r).iter().all(Option::is_none)) {
        return Err(AssignmentError::InfeasibleRow { row });
    }

    // Column `m` is a virtual root holding the row being inserted.
    let mut u = vec![C::zero(); n];
    let mut v = vec![C::zero(); m + 1];
    let mut owner = vec![FREE; m + 1];
    let mut way = vec![m; m + 1];
    let mut minv: Vec<Option<C>> = vec![None; m];
    let mut used = vec![false; m + 1];

    for i in 0..n {
        owner[m] = i;
        let mut j0 = m;
        minv.iter_mut().for_each(|x| *x = None);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let ui0 = u[i0];
            let row = cost.row(i0);
            let mut delta: Option<C> = None;
            let mut j1 = FREE;
            for j in 0..m {
                if used[j] {
                    continue;
                }
                if let Some(c) = row[j] {
                    let reduced = c - ui0 - v[j];
                    if minv[j].is_none_or(|mv| reduced < mv) {
                        minv[j] = Some(reduced);
                        way[j] = j0;
                    }
                }
                if let Some(mv) = minv[j] {
                    if delta.is_none_or(|d| mv < d) {
                        delta = Some(mv);
                        j1 = j;
                    }
                }
            }
            let delta = delta.ok_or(AssignmentError::InfeasibleRow { row: i })?;
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(mv) = minv[j] {
                    minv[j] = Some(mv - delta);
                }
            }
            j0 = j1;
            if owner[j0] == FREE {
                break;
            }
        }
        // augment along the alternating path back to the root
        while j0 != m {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![FREE; n];
    for (j, &r) in owner[..m].iter().enumerate() {
        if r != FREE {
            row_to_col[r] = j;
        }
    }
    let total_cost = cost
        .cost_of(&row_to_col)
        .expect("augmenting paths only use finite entries");
    Ok(AssignmentResult {
        row_to_col,
        total_cost,
    })
}

/// Exhaustive minimum over all injections of rows into columns. Test oracle
/// for small matrices; returns the lexicographically first optimal matching.
pub fn brute_force_assignment<C: Cost>(
    cost: &CostMatrix<C>,
) -> Result<AssignmentResult<C>, AssignmentError> {
    let (n, m) = (cost.rows, cost.cols);
    if n > BRUTE_FORCE_MAX_ROWS || m > BRUTE_FORCE_MAX_COLS {
        return Err(AssignmentError::TooLargeForBruteForce {
            rows: n,
            cols: m,
            max_rows: BRUTE_FORCE_MAX_ROWS,
            max_cols: BRUTE_FORCE_MAX_COLS,
        });
    }
    if n > m {
        return Err(AssignmentError::TooManyRows { rows: n, cols: m });
    }

    struct Search<'a, C> {
        cost: &'a CostMatrix<C>,
        current: Vec<usize>,
        taken: Vec<bool>,
        best: Option<(C, Vec<usize>)>,
    }

    impl<C: Cost> Search<'_, C> {
        fn go(&mut self, row: usize, acc: C) {
            if row == self.cost.rows {
                if self.best.as_ref().is_none_or(|(b, _)| acc < *b) {
                    self.best = Some((acc, self.current.clone()));
                }
                return;
            }
            for col in 0..self.cost.cols {
                if self.taken[col] {
                    continue;
                }
                if let Some(c) = self.cost.get(row, col) {
                    self.taken[col] = true;
                    self.current.push(col);
                    self.go(row + 1, acc + c);
                    self.current.pop();
                    self.taken[col] = false;
                }
            }
        }
    }

    let mut search = Search {
        cost,
        current: Vec::with_capacity(n),
        taken: vec![false; m],
        best: None,
    };
    search.go(0, C::zero());
    match search.best {
        Some((total_cost, row_to_col)) => Ok(AssignmentResult {
            row_to_col,
            total_cost,
        }),
        None => {
            let row = (0..n)
                .find(|&r| cost.row(r).iter().all(Option::is_none))
                .unwrap_or(0);
            Err(AssignmentError::InfeasibleRow { row })
        }
    }
}
