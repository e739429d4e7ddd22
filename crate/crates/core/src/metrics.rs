//! Rank statistics, justified envy and Pareto optimality of allocations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Allocation, Market, ModelError, SchoolId, StudentId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("Pareto check requires every student to rank every school")]
    RequiresFullLists,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Summary of the rank distribution of one allocation.
///
/// `mean`, `max` and `variance` are taken over assigned students only; the
/// histogram covers everyone, with unassigned students at their effective
/// rank `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankStats {
    pub n_students: usize,
    pub assigned: usize,
    pub mean: f64,
    pub max: u32,
    /// Sample variance (denominator `assigned - 1`).
    pub variance: f64,
    pub histogram: BTreeMap<u32, usize>,
    pub unassigned_count: usize,
    /// Sum of effective ranks over all students.
    pub rank_sum: u64,
    /// Fraction of all students with justified envy.
    pub envy_share: f64,
}

pub fn rank_stats(market: &Market, allocation: &Allocation) -> Result<RankStats, ModelError> {
    allocation.check(market)?;
    let ranks = allocation.ranks(market)?;
    let envious = justified_envy(market, allocation)?;

    let mut histogram = BTreeMap::new();
    let mut rank_sum = 0u64;
    let (mut count, mut sum, mut max) = (0usize, 0f64, 0u32);
    for ((_, placement), &r) in allocation.iter().zip(&ranks) {
        *histogram.entry(r).or_insert(0) += 1;
        rank_sum += r as u64;
        if placement.is_some() {
            count += 1;
            sum += r as f64;
            max = max.max(r);
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    let variance = if count > 1 {
        allocation
            .iter()
            .zip(&ranks)
            .filter(|((_, p), _)| p.is_some())
            .map(|(_, &r)| (r as f64 - mean).powi(2))
            .sum::<f64>()
            / (count - 1) as f64
    } else {
        0.0
    };
    let n = market.n_students();
    Ok(RankStats {
        n_students: n,
        assigned: count,
        mean,
        max,
        variance,
        histogram,
        unassigned_count: n - count,
        rank_sum,
        envy_share: if n > 0 {
            envious.len() as f64 / n as f64
        } else {
            0.0
        },
    })
}

/// For each cutoff `m`, the share of students whose effective rank is
/// strictly greater than `m`.
pub fn threshold_shares(stats: &RankStats, thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&m| {
            if stats.n_students == 0 {
                return 0.0;
            }
            let above: usize = stats
                .histogram
                .iter()
                .filter(|(&r, _)| r as f64 > m)
                .map(|(_, &c)| c)
                .sum();
            above as f64 / stats.n_students as f64
        })
        .collect()
}

/// Students `t` for which some school `s` satisfies: `t` prefers `s` to
/// their placement (any ranked school, if unassigned), `s` lists `t`, and `t`
/// has higher priority at `s` than the lowest-priority student `s` admitted.
/// Admitted students that `s` does not list rank below every listed one.
pub fn justified_envy(
    market: &Market,
    allocation: &Allocation,
) -> Result<BTreeSet<StudentId>, ModelError> {
    allocation.check(market)?;
    let priority = market.priority_index();
    let mut worst: Vec<Option<u32>> = vec![None; market.n_schools()];
    for (t, s) in allocation.iter() {
        if let Some(s) = s {
            let p = priority.position_or_last(s, t);
            let w = &mut worst[s.index()];
            *w = Some(w.map_or(p, |w| w.max(p)));
        }
    }

    let mut out = BTreeSet::new();
    for t in market.students() {
        let own = allocation.school_of(t);
        for &s in market.prefs(t) {
            if Some(s) == own {
                break;
            }
            if let (Some(p), Some(w)) = (priority.position(s, t), worst[s.index()]) {
                if p < w {
                    out.insert(t);
                    break;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pareto {
    Optimal,
    /// `witness` makes someone strictly better off and nobody worse off.
    Dominated {
        witness: Allocation,
    },
}

impl Pareto {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Pareto::Optimal)
    }
}

#[derive(Clone, Copy, Debug)]
enum Edge {
    /// Take the seat held by this student.
    Holder(StudentId),
    /// Take a free seat at this school.
    Free(SchoolId),
}

/// Pareto optimality for students, by improvement-cycle search.
///
/// Every student points to the holders of schools they strictly prefer to
/// their placement, and to a sink for preferred schools with a free seat. The
/// allocation is dominated iff this graph has a cycle or a path into the
/// sink; the trade along it is returned as the witness.
pub fn is_pareto_optimal(market: &Market, allocation: &Allocation) -> Result<Pareto, MetricsError> {
    if !market.has_full_lists() {
        return Err(MetricsError::RequiresFullLists);
    }
    allocation.check(market)?;

    let holders = allocation.holders(market.n_schools());
    let free: Vec<bool> = market
        .schools()
        .map(|s| (holders[s.index()].len() as u32) < market.capacity(s))
        .collect();
    let edges: Vec<Vec<Edge>> = market
        .students()
        .map(|t| {
            let own = allocation.school_of(t);
            let mut out = Vec::new();
            for &s in market.prefs(t) {
                if Some(s) == own {
                    break;
                }
                if free[s.index()] {
                    out.push(Edge::Free(s));
                }
                out.extend(holders[s.index()].iter().map(|&h| Edge::Holder(h)));
            }
            out
        })
        .collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; market.n_students()];
    for root in market.students() {
        if color[root.index()] != Color::White {
            continue;
        }
        let mut stack: Vec<(StudentId, usize)> = vec![(root, 0)];
        color[root.index()] = Color::Gray;
        while let Some(&mut (t, ref mut cursor)) = stack.last_mut() {
            let Some(&edge) = edges[t.index()].get(*cursor) else {
                color[t.index()] = Color::Black;
                stack.pop();
                continue;
            };
            *cursor += 1;
            match edge {
                Edge::Free(s) => {
                    let path: Vec<StudentId> = stack.iter().map(|&(t, _)| t).collect();
                    return Ok(Pareto::Dominated {
                        witness: trade(allocation, &path, Some(s)),
                    });
                }
                Edge::Holder(h) => match color[h.index()] {
                    Color::White => {
                        color[h.index()] = Color::Gray;
                        stack.push((h, 0));
                    }
                    Color::Gray => {
                        let from = stack
                            .iter()
                            .position(|&(x, _)| x == h)
                            .expect("gray nodes are on the stack");
                        let cycle: Vec<StudentId> = stack[from..].iter().map(|&(t, _)| t).collect();
                        return Ok(Pareto::Dominated {
                            witness: trade(allocation, &cycle, None),
                        });
                    }
                    Color::Black => {}
                },
            }
        }
    }
    Ok(Pareto::Optimal)
}

/// Each student on `path` takes the seat of the next one. The last student
/// takes `tail` if given, otherwise the first student's seat (a cycle).
fn trade(allocation: &Allocation, path: &[StudentId], tail: Option<SchoolId>) -> Allocation {
    let mut out = allocation.clone();
    for (i, &t) in path.iter().enumerate() {
        let next = match path.get(i + 1) {
            Some(&n) => allocation.school_of(n),
            None => tail.or_else(|| allocation.school_of(path[0])),
        };
        out.assign(t, next);
    }
    out
}
